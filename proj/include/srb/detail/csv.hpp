#ifndef SRB_DETAIL_CSV_HPP
#define SRB_DETAIL_CSV_HPP

#include <cstdio>
#include <string>

namespace srb::detail {

// Shortest round-trip-safe decimal form, identical across runs and platforms.
inline void append_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

inline std::string double_str(double v) {
  std::string out;
  append_double(out, v);
  return out;
}

}  // namespace srb::detail

#endif
