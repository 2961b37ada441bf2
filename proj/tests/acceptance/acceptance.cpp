// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance [suite...] [--expect-fail id[,id...]] [--threads n] [--scratch dir]
// Exit status is 0 when the failing criteria are exactly the expected ones.

#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>

#include "eplab/acceptance.hpp"
#include "eplab/error.hpp"
#include "eplab/parallel.hpp"

int main(int argc, char** argv) {
    std::vector<int> ids;
    std::set<int> expected;
    eplab::AcceptanceOptions opts;
    opts.threads = eplab::default_threads();
    try {
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            if ((arg == "--expect-fail" || arg == "--threads" || arg == "--scratch") && i + 1 == argc)
                throw eplab::Error(eplab::ErrorCode::InvalidArgument, arg + " needs a value");
            if (arg == "--expect-fail") {
                std::istringstream in(argv[++i]);
                for (std::string tok; std::getline(in, tok, ',');) expected.insert(std::stoi(tok));
            } else if (arg == "--threads") {
                opts.threads = static_cast<unsigned>(std::stoul(argv[++i]));
            } else if (arg == "--scratch") {
                opts.scratch = argv[++i];
            } else {
                for (int id : eplab::acceptance_suite(arg)) ids.push_back(id);
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance: %s\n", e.what());
        return 2;
    }
    if (ids.empty()) ids = eplab::acceptance_suite("all");

    std::set<int> failed;
    eplab::run_acceptance(ids, opts, [&](const eplab::CriterionResult& r) {
        std::printf("%s\n", eplab::format_result(r).c_str());
        std::fflush(stdout);
        if (!r.pass) failed.insert(r.id);
    });
    std::set<int> expected_here;
    for (int id : ids)
        if (expected.count(id)) expected_here.insert(id);
    std::printf("%zu/%zu criteria pass", ids.size() - failed.size(), ids.size());
    if (!expected_here.empty()) {
        std::printf("; expected failures:");
        for (int id : expected_here) std::printf(" %d", id);
    }
    std::printf("\n");
    return failed == expected_here ? 0 : 1;
}
