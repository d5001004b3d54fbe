// geobeam: tube covers, loop classification and bound certificates from a YAML config.
//
//   geobeam <cover|classify|certify|conjugate|sweep|figure> CONFIG [--set section.key=value]... [--jobs N]
//
// Exit codes: 0 ok, 1 computation error, 2 config error, 3 verification failure.

#include <geobeam/pipeline.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + p.string());
    out << text;
}

int fail(int code, const std::string& type, const std::string& message, const std::string& key,
         const std::string& dir) {
    json e{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}};
    if (!key.empty())
        e["error"]["key"] = key;
    std::cerr << e.dump(2) << "\n";
    if (!dir.empty()) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (!ec) {
            std::ofstream out(fs::path(dir) / "error.json", std::ios::binary);
            out << e.dump(2) << "\n";
        }
    }
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"geobeam: geodesic tube covers, non-self-looping partitions and bound certificates"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> overrides;
    int jobs = 0;
    std::string out_dir;
    const std::vector<std::pair<std::string, std::string>> verbs = {
        {"cover", "build and verify the tube cover"},
        {"classify", "cover, loop relation and partition with sampled verification"},
        {"certify", "classify, then evaluate the bound certificate"},
        {"conjugate", "check the no-conjugate-points hypothesis"},
        {"sweep", "classify and certify over a grid of radii"},
        {"figure", "classify and draw the fiber diagram (n = 2)"},
    };
    for (const auto& [name, help] : verbs) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("config", config_path, "YAML configuration file")->required();
        sub->add_option("--set", overrides, "override one key: section.key=value")->allow_extra_args(false);
        sub->add_option("--jobs", jobs, "worker threads (default: hardware parallelism)");
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        return fail(2, "usage", e.what(), "", "");
    }
    const std::string verb = app.get_subcommands().front()->get_name();

    json cfg;
    try {
        cfg = geobeam::load_config_file(config_path);
        for (const auto& o : overrides)
            geobeam::apply_override(cfg, o);
        if (!out_dir.empty())
            cfg["output"]["dir"] = out_dir;
    } catch (const geobeam::ConfigError& e) {
        return fail(2, "config", e.what(), e.key, out_dir);
    }
    const std::string dir = cfg["output"]["dir"];
    jobs = geobeam::resolve_jobs(jobs);

    geobeam::RunResult res;
    try {
        if (verb == "conjugate")
            res = geobeam::run_conjugate(cfg, jobs);
        else if (verb == "sweep")
            res = geobeam::run_sweep(cfg, jobs);
        else
            res = geobeam::run_pipeline(verb, cfg, jobs);
    } catch (const geobeam::ConfigError& e) {
        return fail(2, "config", e.what(), e.key, dir);
    } catch (const geobeam::PreconditionError& e) {
        return fail(2, "precondition", e.what(), "", dir);
    } catch (const geobeam::CoverError& e) {
        return fail(3, "cover-verification", e.what(), "", dir);
    } catch (const geobeam::VerificationFailure& e) {
        return fail(3, "verification", e.what(), "", dir);
    } catch (const std::exception& e) {
        return fail(1, "computation", e.what(), "", dir);
    }

    try {
        fs::create_directories(dir);
        const json& oc = cfg["output"];
        if (oc["report"].get<bool>())
            write_file(fs::path(dir) / "report.json", res.report.dump(2) + "\n");
        if (oc["tubes_csv"].get<bool>() && !res.tubes_csv.empty())
            write_file(fs::path(dir) / "tubes.csv", res.tubes_csv);
        if (oc["relation"].get<bool>() && !res.relation.is_null())
            write_file(fs::path(dir) / "relation.json", res.relation.dump(2) + "\n");
        if (!res.svg.empty())
            write_file(fs::path(dir) / "fiber.svg", res.svg);
        if (!res.sweep_csv.empty())
            write_file(fs::path(dir) / "sweep.csv", res.sweep_csv);
    } catch (const std::exception& e) {
        return fail(1, "io", e.what(), "", "");
    }
    std::cout << verb << ": " << res.report.value("status", "ok") << " (" << dir << ")\n";
    return res.exit_code;
}
