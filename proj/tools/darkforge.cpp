// darkforge: low-light corpus synthesis and model-cost analysis toolkit.
//
// Subcommands: stats, degrade, lapm, cost, check.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "darkforge/coco.hpp"
#include "darkforge/costmodel.hpp"
#include "darkforge/degrade.hpp"
#include "darkforge/imageio.hpp"
#include "darkforge/lapm.hpp"
#include "darkforge/stats.hpp"
#include "darkforge/tensor.hpp"
#include "darkforge/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace darkforge;

namespace {

constexpr const char* kToolVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> list_images(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t hash_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return fnv1a(bytes);
}

DegradeConfig load_degrade_config(const std::string& path) {
    DegradeConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config " + path);
    std::string line;
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string key;
        if (!std::getline(ls, key, '=')) continue;
        std::string value;
        std::getline(ls, value);
        auto trim = [](std::string& s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
        };
        trim(key);
        trim(value);
        if (key.empty()) continue;
        if (key == "tau_color")
            cfg.tau_color = std::stod(value);
        else if (key == "epsilon")
            cfg.epsilon = std::stod(value);
        else if (key == "seed")
            cfg.seed = std::stoull(value);
        else if (key == "sigma_floor")
            cfg.sigma_floor = std::stod(value);
        else
            throw std::runtime_error("unknown config key: " + key);
    }
    return cfg;
}

int default_jobs() {
    if (const char* env = std::getenv("DARKFORGE_JOBS")) {
        const int j = std::atoi(env);
        if (j > 0) return j;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

// -------------------------------------------------------------------------

int cmd_stats(const std::string& in_dir, const std::string& out_path) {
    const std::vector<fs::path> files = list_images(in_dir);
    std::vector<ImageStats> all_stats;
    std::vector<std::string> names;
    std::vector<std::array<std::uint64_t, 3 * 256>> histograms;
    std::array<std::uint64_t, 3 * 256> hist{};
    int skipped = 0;

    std::ostringstream csv;
    csv << "file,mean_R,std_R,mean_G,std_G,mean_B,std_B\n";
    for (const auto& f : files) {
        RgbImageU8 img;
        try {
            img = load_image(f.string());
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << f << ": " << e.what() << "\n";
            ++skipped;
            continue;
        }
        const ImageStats st = channel_mean_std(img);
        all_stats.push_back(st);
        const std::string rel = fs::relative(f, in_dir).generic_string();
        names.push_back(rel);
        csv << rel;
        for (int c = 0; c < 3; ++c) csv << ',' << st[c].mean << ',' << st[c].std;
        csv << '\n';
        for (std::size_t p = 0; p < img.pixels(); ++p)
            for (int c = 0; c < 3; ++c) ++hist[c * 256 + img.data[p * 3 + c]];
    }
    if (all_stats.empty()) {
        std::cerr << "error: no decodable images in " << in_dir << "\n";
        return kExitData;
    }

    const ChannelStatsSummary summary = summarize_corpus(all_stats);
    {
        std::ofstream out(out_path);
        out << summary_to_json(summary).dump(2) << "\n";
    }
    const fs::path base = fs::path(out_path).parent_path() / fs::path(out_path).stem();
    {
        std::ofstream out(base.string() + "_images.csv");
        out << csv.str();
    }
    {
        std::ofstream out(base.string() + "_hist.csv");
        out << "bin,R,G,B\n";
        for (int b = 0; b < 256; ++b)
            out << b << ',' << hist[b] << ',' << hist[256 + b] << ',' << hist[512 + b] << '\n';
    }
    std::cerr << "summarized " << all_stats.size() << " images (" << skipped << " skipped)\n";
    return kExitOk;
}

int cmd_degrade(const std::string& in_dir, const std::string& out_dir,
                const std::string& stats_path, std::uint64_t seed,
                const std::string& annotations_in, const std::string& annotations_out,
                const std::string& config_path, int jobs) {
    ChannelStatsSummary summary;
    try {
        std::ifstream f(stats_path);
        if (!f) throw std::runtime_error("cannot open stats file " + stats_path);
        json j;
        f >> j;
        summary = summary_from_json(j);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }

    DegradeConfig cfg;
    try {
        cfg = load_degrade_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    cfg.seed = seed;

    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<fs::path> files = list_images(in_dir);
    if (files.empty()) {
        std::cerr << "error: no images in " << in_dir << "\n";
        return kExitData;
    }

    struct Item {
        std::string key;       // relative path, the RNG stream key
        fs::path in_path;
        fs::path out_path;
        std::string out_name;  // relative output name for annotations
        std::uint64_t hash = 0;
        bool ok = false;
        std::string error;
    };
    std::vector<Item> items;
    for (const auto& f : files) {
        Item it;
        it.key = fs::relative(f, in_dir).generic_string();
        it.in_path = f;
        fs::path rel = fs::relative(f, in_dir);
        rel.replace_extension(".png");
        it.out_name = rel.generic_string();
        it.out_path = fs::path(out_dir) / rel;
        items.push_back(std::move(it));
    }

    fs::create_directories(out_dir);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            Item& it = items[i];
            try {
                const RgbImageU8 img = load_image(it.in_path.string());
                const RgbImageU8 out = degrade_image(img, summary, cfg, it.key);
                fs::create_directories(it.out_path.parent_path());
                save_png(it.out_path.string(), out);
                it.hash = hash_file(it.out_path);
                it.ok = true;
            } catch (const std::exception& e) {
                it.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    int failures = 0;
    for (const auto& it : items)
        if (!it.ok) {
            std::cerr << "error: " << it.key << ": " << it.error << "\n";
            ++failures;
        }
    if (failures > 0) return kExitData;

    bool with_annotations = !annotations_in.empty();
    if (with_annotations) {
        std::map<std::string, std::string> fmap;
        for (const auto& it : items) fmap[it.key] = it.out_name;
        try {
            std::ifstream f(annotations_in);
            if (!f) throw std::runtime_error("cannot open annotations " + annotations_in);
            json doc;
            f >> doc;
            json out = passthrough_annotations(doc, fmap);
            std::ofstream o(annotations_out);
            o << out.dump(2) << "\n";
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitData;
        }
    }

    const auto t1 = std::chrono::steady_clock::now();
    json manifest;
    manifest["schema_version"] = 1;
    manifest["tool_version"] = kToolVersion;
    manifest["command"] = "degrade";
    manifest["seed"] = seed;
    manifest["config"] = {{"tau_color", cfg.tau_color},
                          {"epsilon", cfg.epsilon},
                          {"sigma_floor", cfg.sigma_floor}};
    manifest["annotations"] = with_annotations ? annotations_out : "none";
    manifest["duration_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    json images = json::array();
    for (const auto& it : items)
        images.push_back({{"key", it.key}, {"output", it.out_name}, {"hash", hex64(it.hash)}});
    manifest["images"] = images;
    std::ofstream mf(fs::path(out_dir) / "manifest.json");
    mf << manifest.dump(2) << "\n";

    std::cerr << "degraded " << items.size() << " images\n";
    return kExitOk;
}

int cmd_lapm(const std::string& in_image, const std::string& out_dir, double lambda, double tau,
             int levels) {
    RgbImageU8 img;
    try {
        img = load_image(in_image);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    const int min_side = 1 << levels;
    if (img.width < min_side || img.height < min_side) {
        std::cerr << "error: image is " << img.width << "x" << img.height << ", needs at least "
                  << min_side << " px per side for " << levels << " levels\n";
        return kExitData;
    }
    LapmConfig cfg;
    cfg.lambda = lambda;
    cfg.tau_photon = tau;
    cfg.levels = levels;
    LapmParams params;
    const LapmPyramid pyr = lapm_pyramid(to_float(img), cfg, params);

    fs::create_directories(out_dir);
    for (int k = 0; k < levels; ++k) {
        const std::string tag = "level" + std::to_string(k + 1);
        save_mask_png((fs::path(out_dir) / ("mask_" + tag + ".png")).string(), pyr.masks[k]);
        write_golden((fs::path(out_dir) / ("texture_" + tag + ".f64")).string(),
                     {pyr.features[k].height, pyr.features[k].width}, pyr.features[k].data);
    }
    json sidecar;
    sidecar["schema_version"] = 1;
    sidecar["lambda"] = cfg.lambda;
    sidecar["tau"] = cfg.tau_photon;
    sidecar["levels"] = cfg.levels;
    sidecar["params"] = {
        {"w", params.w}, {"bias", params.bias}, {"gamma", params.gamma}, {"beta", params.beta}};
    std::ofstream sf(fs::path(out_dir) / "lapm.json");
    sf << sidecar.dump(2) << "\n";
    return kExitOk;
}

void emit_report(const json& j, const std::string& out_path) {
    if (out_path.empty())
        std::cout << j.dump(2) << "\n";
    else {
        std::ofstream f(out_path);
        f << j.dump(2) << "\n";
    }
}

int cmd_cost_conv(long long c1, long long c2, long long k, long long hw,
                  std::vector<long long> g_values, const std::string& out_path,
                  const std::string& csv_path) {
    LayerSpec spec{c1, c2, k, k, hw, hw, 1, "standard-conv"};
    if (g_values.empty()) g_values = {1, 2, 4, 8};
    const IncrementCurve curve = increment_curve(spec, g_values);
    json j;
    j["schema_version"] = 1;
    j["spec"] = {{"c1", c1}, {"c2", c2}, {"k", k}, {"hw", hw}};
    j["flops"] = i128_to_json(conv_flops(spec));
    j["macs"] = i128_to_json(conv_macs(spec));
    j["params"] = i128_to_json(int128(c1) * c2 * k * k);
    json jc = json::array();
    for (const auto& p : curve.points)
        jc.push_back({{"g", p.g}, {"F", i128_to_json(p.f)}, {"M", p.m.to_string()}});
    j["curve"] = jc;
    j["convention"] = "FLOPs: 2*C1*C2*Kh*Kw*H*W (1 MAC = 2 FLOPs, bias absorbed)";
    emit_report(j, out_path);
    if (!csv_path.empty()) {
        std::ofstream f(csv_path);
        f << "g,F,M\n";
        for (const auto& p : curve.points)
            f << p.g << ',' << i128_to_string(p.f) << ',' << p.m.to_string() << '\n';
    }
    return kExitOk;
}

int cmd_cost_fsl(long long c1, long long c2, long long hw, const std::string& out_path) {
    if (c2 % 2 != 0) {
        std::cerr << "error: C2 must be even for fsl\n";
        return kExitUsage;
    }
    const FslLayerCost cost = fsl_layer_cost(c1, c2, hw, hw);
    const int128 std_weights = int128(c1) * c2 * 9;
    json j;
    j["schema_version"] = 1;
    j["spec"] = {{"c1", c1}, {"c2", c2}, {"hw", hw}};
    j["flops"] = i128_to_json(cost.flops);
    j["weight_params"] = i128_to_json(cost.weight_params);
    j["standard_conv_weight_params"] = i128_to_json(std_weights);
    j["weight_ratio"] = double(static_cast<long long>(cost.weight_params)) /
                        double(static_cast<long long>(std_weights));
    emit_report(j, out_path);
    return kExitOk;
}

int cmd_cost_lapm(long long hw, int levels, const std::string& out_path) {
    const LapmCost cost = lapm_cost(hw, hw, levels);
    json j;
    j["schema_version"] = 1;
    j["spec"] = {{"hw", hw}, {"levels", levels}};
    j["amplify"] = i128_to_json(cost.amplify);
    j["grayscale"] = i128_to_json(cost.grayscale);
    j["threshold"] = i128_to_json(cost.threshold);
    json per = json::array();
    for (const auto& c : cost.per_level) per.push_back(i128_to_json(c));
    j["per_level"] = per;
    j["total_flops"] = i128_to_json(cost.total);
    j["total_gflops"] = double(static_cast<long long>(cost.total)) / 1e9;
    j["convention"] = cost.convention;
    emit_report(j, out_path);
    return kExitOk;
}

int cmd_cost_network(const std::string& layers_path, const std::string& out_path) {
    std::vector<LayerSpec> layers;
    try {
        std::ifstream f(layers_path);
        if (!f) throw std::runtime_error("cannot open " + layers_path);
        json j;
        f >> j;
        for (const auto& jl : j.at("layers")) {
            LayerSpec s;
            s.kind = jl.value("kind", "standard-conv");
            s.c_in = jl.at("c_in").get<long long>();
            s.c_out = jl.at("c_out").get<long long>();
            s.kh = jl.value("kh", 1LL);
            s.kw = jl.value("kw", 1LL);
            s.h = jl.at("h").get<long long>();
            s.w = jl.at("w").get<long long>();
            s.groups = jl.value("groups", 1LL);
            layers.push_back(s);
        }
        const NetworkCost cost = network_cost(layers);
        emit_report(network_cost_to_json(layers, cost), out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}

int cmd_check(bool perturb) {
    VerifyOptions opt;
    opt.perturb_backward = perturb;
    const std::vector<SuiteResult> results = run_verification(opt);
    bool all_pass = true;
    std::printf("%-20s %-6s %-12s %-12s %s\n", "suite", "state", "max_err", "tol", "detail");
    for (const auto& r : results) {
        all_pass = all_pass && r.pass;
        std::printf("%-20s %-6s %-12.3e %-12.3e %s\n", r.name.c_str(),
                    r.pass ? "pass" : "FAIL", r.max_err, r.tol, r.detail.c_str());
    }
    return all_pass ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"darkforge: low-light corpus synthesis and model-cost analysis"};
    app.require_subcommand(1);

    // stats
    std::string stats_in, stats_out;
    auto* stats = app.add_subcommand("stats", "Summarize per-channel corpus statistics");
    stats->add_option("in_dir", stats_in, "Input image directory")->required();
    stats->add_option("out_json", stats_out, "Output summary JSON path")->required();

    // degrade
    std::string deg_in, deg_out, deg_stats, deg_ann_in, deg_ann_out, deg_cfg;
    std::uint64_t deg_seed = 0;
    int deg_jobs = default_jobs();
    auto* degrade = app.add_subcommand("degrade", "Batch illumination degradation");
    degrade->add_option("--in", deg_in, "Input image directory")->required();
    degrade->add_option("--out", deg_out, "Output directory")->required();
    degrade->add_option("--stats", deg_stats, "Target statistics JSON")->required();
    degrade->add_option("--seed", deg_seed, "Global seed");
    degrade->add_option("--annotations-in", deg_ann_in, "COCO annotations to pass through");
    degrade->add_option("--annotations-out", deg_ann_out, "Remapped annotations output");
    degrade->add_option("--config", deg_cfg, "Flat key=value config file");
    degrade->add_option("--jobs", deg_jobs, "Worker count (env DARKFORGE_JOBS)");

    // lapm
    std::string lapm_in, lapm_out;
    double lapm_lambda = 8.0, lapm_tau = 0.02;
    int lapm_levels = 5;
    auto* lapm = app.add_subcommand("lapm", "Photoreceptive pipeline inspection");
    lapm->add_option("--in", lapm_in, "Input image")->required();
    lapm->add_option("--out", lapm_out, "Output directory")->required();
    lapm->add_option("--lambda", lapm_lambda, "Amplification factor");
    lapm->add_option("--tau", lapm_tau, "Photon threshold");
    lapm->add_option("--levels", lapm_levels, "Pyramid depth");

    // cost
    auto* cost = app.add_subcommand("cost", "Analytic FLOPs/MACs reports");
    cost->require_subcommand(1);
    long long cc1 = 64, cc2 = 64, ck = 3, chw = 32;
    std::vector<long long> cg;
    std::string cost_out, cost_csv;
    auto* cost_conv = cost->add_subcommand("conv", "Standard/grouped conv cost and F/M curve");
    cost_conv->add_option("--c1", cc1)->required();
    cost_conv->add_option("--c2", cc2)->required();
    cost_conv->add_option("--k", ck)->required();
    cost_conv->add_option("--hw", chw, "Output spatial size")->required();
    cost_conv->add_option("--g", cg, "Split factors for the curve");
    cost_conv->add_option("--out", cost_out, "JSON output path (default stdout)");
    cost_conv->add_option("--csv", cost_csv, "Curve CSV export path");

    long long fc1 = 64, fc2 = 64, fhw = 32;
    std::string fsl_out;
    auto* cost_fsl = cost->add_subcommand("fsl", "Two-stage separable block cost");
    cost_fsl->add_option("--c1", fc1)->required();
    cost_fsl->add_option("--c2", fc2)->required();
    cost_fsl->add_option("--hw", fhw, "Output spatial size")->required();
    cost_fsl->add_option("--out", fsl_out, "JSON output path (default stdout)");

    long long lhw = 640;
    int llevels = 5;
    std::string lapm_cost_out;
    auto* cost_lapm = cost->add_subcommand("lapm", "Photoreceptive branch cost");
    cost_lapm->add_option("--hw", lhw, "Input spatial size");
    cost_lapm->add_option("--levels", llevels, "Pyramid depth");
    cost_lapm->add_option("--out", lapm_cost_out, "JSON output path (default stdout)");

    std::string net_layers, net_out;
    auto* cost_net = cost->add_subcommand("network", "Whole-chain cost from a layer list");
    cost_net->add_option("--layers", net_layers, "Layer list JSON")->required();
    cost_net->add_option("--out", net_out, "JSON output path (default stdout)");

    // check
    bool check_perturb = false;
    auto* check = app.add_subcommand("check", "Run the embedded verification battery");
    check->add_flag("--perturb-backward", check_perturb,
                    "Negative control: corrupt analytic gradients");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (stats->parsed()) return cmd_stats(stats_in, stats_out);
        if (degrade->parsed())
            return cmd_degrade(deg_in, deg_out, deg_stats, deg_seed, deg_ann_in, deg_ann_out,
                               deg_cfg, deg_jobs);
        if (lapm->parsed()) return cmd_lapm(lapm_in, lapm_out, lapm_lambda, lapm_tau, lapm_levels);
        if (cost->parsed()) {
            if (cost_conv->parsed()) return cmd_cost_conv(cc1, cc2, ck, chw, cg, cost_out, cost_csv);
            if (cost_fsl->parsed()) return cmd_cost_fsl(fc1, fc2, fhw, fsl_out);
            if (cost_lapm->parsed()) return cmd_cost_lapm(lhw, llevels, lapm_cost_out);
            if (cost_net->parsed()) return cmd_cost_network(net_layers, net_out);
        }
        if (check->parsed()) return cmd_check(check_perturb);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
