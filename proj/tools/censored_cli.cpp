// censored_cli: run one experiment, write report + samples + manifest.
// exit 0 pass, 2 bound violated, 1 error

#include <iostream>

#include "censored/cli.hpp"

int main(int argc, char** argv) {
    using namespace censored;
    CliRequest req;
    try {
        req = parse_args(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "censored_cli: " << e.what() << "\n";
        return 1;
    }
    if (!req.help.empty()) {
        std::cout << req.help;
        return 0;
    }
    if (req.list) {
        for (const auto& id : experiment_ids()) std::cout << id << "\n";
        return 0;
    }
    try {
        const auto [res, man] = run_and_write(req.cfg);
        if (!req.quiet) {
            std::cout << req.cfg.exp << " " << (res.passed() ? "PASS" : "VIOLATED") << " hash=" << man.config_hash
                      << " wall=" << man.wall_time_s << "s\n";
            for (const auto& f : man.outputs) std::cout << "  " << f << "\n";
        }
        return res.passed() ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "censored_cli: " << e.what() << "\n";
        return 1;
    }
}
