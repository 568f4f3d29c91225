#pragma once

// Shared reporting for the acceptance suite: each criterion prints exactly one
// PASS/FAIL line and exits nonzero on failure.

#include <cstdio>
#include <string>

namespace acceptance {

struct Criterion {
    int number;
    std::string title;
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }

    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }

    int finish() const {
        std::printf("ACCEPTANCE %d (%s): %s%s%s\n", number, title.c_str(),
                    pass ? "PASS" : "FAIL", detail.empty() ? "" : " | ",
                    detail.c_str());
        std::fflush(stdout);
        return pass ? 0 : 1;
    }
};

} // namespace acceptance
