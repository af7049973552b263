#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include "criteria.hpp"

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
            if (only < 1 || only > 11) {
                std::fprintf(stderr, "error: criterion must be 1..11\n");
                return 2;
            }
        } else {
            std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
            return 2;
        }
    }

    using Fn = acceptance::Result (*)();
    const Fn checks[11] = {acceptance::criterion_1, acceptance::criterion_2,
                           acceptance::criterion_3, acceptance::criterion_4,
                           acceptance::criterion_5, acceptance::criterion_6,
                           acceptance::criterion_7, acceptance::criterion_8,
                           acceptance::criterion_9, acceptance::criterion_10,
                           acceptance::criterion_11};

    int failures = 0;
    for (int c = 1; c <= 11; ++c) {
        if (only != 0 && only != c) continue;
        acceptance::Result r;
        try {
            r = checks[c - 1]();
        } catch (const std::exception& e) {
            r = {false, std::string("unexpected exception: ") + e.what()};
        }
        std::printf("[%s] criterion %d: %s\n", r.pass ? "PASS" : "FAIL", c, r.detail.c_str());
        std::fflush(stdout);
        if (!r.pass) ++failures;
    }
    return failures;
}
