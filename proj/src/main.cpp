#include <CLI11.hpp>
#include <cstdio>

#include "floq/runconfig.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Floquet scattering solver for a periodically driven spherical well"};
    std::string config_path, mode, out_dir;
    int workers = 0;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--mode", mode, "run mode (overrides config)");
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--workers", workers, "worker count (overrides config)");
    app.add_option("--override", overrides, "key=value config override (repeatable)");
    CLI11_PARSE(app, argc, argv);

    try {
        floq::RunConfig cfg;
        if (!config_path.empty()) cfg = floq::parse_config_file(config_path);
        if (!mode.empty()) floq::apply_override(cfg, "mode=" + mode);
        if (!out_dir.empty()) floq::apply_override(cfg, "out=" + out_dir);
        if (workers > 0) floq::apply_override(cfg, "workers=" + std::to_string(workers));
        for (const auto& ov : overrides) floq::apply_override(cfg, ov);
        if (config_path.empty() && mode.empty())
            throw floq::config_error("no config given; use --config and/or --mode");
        floq::validate_config(cfg);
        return floq::run(cfg);
    } catch (const floq::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
