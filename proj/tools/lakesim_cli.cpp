#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lakesim/commands.hpp"
#include "lakesim/errors.hpp"

namespace {

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string w;
    while (std::getline(ss, w, ','))
        if (!w.empty()) out.push_back(w);
    return out;
}

std::vector<double> split_numbers(const std::string& s) {
    std::vector<double> out;
    for (const std::string& w : split_words(s)) {
        std::size_t used = 0;
        const double v = std::stod(w, &used);
        if (used != w.size()) throw std::invalid_argument("malformed number '" + w + "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lake equations vorticity solver and diagnostics"};
    app.require_subcommand(1);

    lakesim::CommandOptions opt;
    std::string monitors, nus, thetas;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opt.config_path, "scenario config file");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--monitors", monitors, "comma separated monitor list");
        sub->add_option("--seed", opt.seed, "random smooth data on the config's domain");
        sub->add_option("--family", opt.family, "random data family: clean or general")
            ->check(CLI::IsMember({"clean", "general"}));
    };

    CLI::App* run = app.add_subcommand("run", "simulate and write snapshots and monitors");
    add_common(run, true);
    CLI::App* snu = app.add_subcommand("study-nu", "vanishing viscosity study");
    add_common(snu, true);
    snu->add_option("--nu", nus, "comma separated decreasing viscosities");
    CLI::App* sth = app.add_subcommand("study-theta", "time lag study");
    add_common(sth, true);
    sth->add_option("--theta", thetas, "comma separated decreasing lags");
    CLI::App* ver = app.add_subcommand("verify", "analytic and manufactured checks");
    CLI::App* diag = app.add_subcommand("diag", "recompute monitors from stored snapshots");
    diag->add_option("--out", opt.out_dir, "directory written by run")->required();
    diag->add_option("--monitors", monitors, "comma separated monitor list");

    CLI11_PARSE(app, argc, argv);

    try {
        opt.monitors = split_words(monitors);
        if (*run) return lakesim::cmd_run(opt, std::cout);
        if (*snu) {
            opt.parameters = split_numbers(nus);
            return lakesim::cmd_study_nu(opt, std::cout);
        }
        if (*sth) {
            opt.parameters = split_numbers(thetas);
            return lakesim::cmd_study_theta(opt, std::cout);
        }
        if (*ver) return lakesim::cmd_verify(std::cout);
        if (*diag) return lakesim::cmd_diag(opt, std::cout);
    } catch (const lakesim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
