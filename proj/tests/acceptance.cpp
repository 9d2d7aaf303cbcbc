// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <iostream>

#include "freqprice/verification.hpp"

int main() {
    using namespace freqprice;
    const auto results = run_verification(VerifyLevel::full);
    int failed = 0;
    for (const auto& r : results) {
        std::cout << format_result(r) << " [" << detail::fmt_num(r.seconds) << " s]" << std::endl;
        if (!r.passed) ++failed;
    }
    std::cout << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
