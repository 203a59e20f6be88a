#include "coverbench/date.hpp"

#include <cstdio>
#include <stdexcept>

namespace coverbench {

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

Date Date::parse(const std::string& text) {
  Date d;
  int n = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%d%n", &d.year, &d.month, &d.day, &n) ==
          3 &&
      n == static_cast<int>(text.size())) {
    // full date
  } else if (std::sscanf(text.c_str(), "%d-%d%n", &d.year, &d.month, &n) == 2 &&
             n == static_cast<int>(text.size())) {
    d.day = 1;
  } else {
    throw std::invalid_argument("unparseable date: '" + text + "'");
  }
  if (d.year < 1000 || d.year > 9999 || d.month < 1 || d.month > 12) {
    throw std::invalid_argument("date out of range: '" + text + "'");
  }
  static const int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int days = kDays[d.month - 1];
  bool leap = d.year % 4 == 0 && (d.year % 100 != 0 || d.year % 400 == 0);
  if (d.month == 2 && leap) days = 29;
  if (d.day < 1 || d.day > days) {
    throw std::invalid_argument("date out of range: '" + text + "'");
  }
  return d;
}

}  // namespace coverbench
