#include <iostream>

#include "midc/verification.hpp"

int main() {
  bool all = true;
  for (const auto& r : midc::run_acceptance_checks()) {
    all = all && r.passed;
    std::cout << (r.passed ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": "
              << r.detail << std::endl;
  }
  return all ? 0 : 1;
}
