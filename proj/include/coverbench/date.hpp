#pragma once

#include <compare>
#include <string>

namespace coverbench {

// Calendar date at month granularity. Journals publish weekly/monthly;
// a day is accepted on parse ("YYYY-MM-DD") and defaults to 1.
struct Date {
  int year = 0;
  int month = 0;
  int day = 1;

  auto operator<=>(const Date&) const = default;

  std::string to_string() const;  // "YYYY-MM-DD"

  // Accepts "YYYY-MM" or "YYYY-MM-DD". Throws std::invalid_argument on
  // malformed or out-of-range input.
  static Date parse(const std::string& text);
};

}  // namespace coverbench
