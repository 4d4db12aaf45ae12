#ifndef LIPNN_ACCEPTANCE_HARNESS_HPP
#define LIPNN_ACCEPTANCE_HARNESS_HPP

#include <cstdio>
#include <cstdlib>
#include <string>

// Always-on acceptance checks: one [PASS]/[FAIL] line per criterion, never
// compiled out, process exits nonzero if anything failed.

namespace acceptance {

inline int g_failures = 0;

inline void check(bool ok, const std::string& label, const std::string& detail) {
  if (ok) {
    std::printf("[PASS] %s (%s)\n", label.c_str(), detail.c_str());
  } else {
    std::printf("[FAIL] %s (%s)\n", label.c_str(), detail.c_str());
    ++g_failures;
  }
  std::fflush(stdout);
}

inline int finish(const char* suite) {
  if (g_failures == 0) {
    std::printf("[SUITE PASS] %s\n", suite);
    return 0;
  }
  std::printf("[SUITE FAIL] %s: %d criterion check(s) failed\n", suite, g_failures);
  return 1;
}

template <typename... Args>
std::string fmt(const char* spec, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), spec, args...);
  return buf;
}

}  // namespace acceptance

#endif  // LIPNN_ACCEPTANCE_HARNESS_HPP
