// tinyzone: batch frontend for the secure-inference simulator. Every
// subcommand prints one JSON report to stdout; errors print a single line to
// stderr and exit nonzero. Simulated costs and wall time are reported
// separately so results never depend on host speed.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tinyzone/client.hpp"
#include "tinyzone/convert.hpp"
#include "tinyzone/genmodel.hpp"
#include "tinyzone/memlayout.hpp"
#include "tinyzone/shmtuner.hpp"
#include "tinyzone/worldsim.hpp"

using nlohmann::json;
using namespace tinyzone;

namespace {

using Clock = std::chrono::steady_clock;

double wall_ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::uint64_t parse_key(const std::string& text) {
    return std::stoull(text, nullptr, 0);  // accepts decimal and 0x hex
}

std::uint64_t key_from_option_or_env(const std::string& key_opt) {
    if (!key_opt.empty()) return parse_key(key_opt);
    if (const char* env = std::getenv("TINYZONE_KEY")) return parse_key(env);
    return 0;
}

json regions_to_json(const MemoryPlan& plan) {
    json regions = json::array();
    for (const Region& r : plan.regions) {
        regions.push_back({{"id", r.id},
                           {"base", r.base},
                           {"size", r.size},
                           {"access", access_class_name(r.access)},
                           {"priority", r.priority}});
    }
    return regions;
}

json overlaps_to_json(const MemoryPlan& plan) {
    json overlaps = json::array();
    for (const OverlapReport& o : detect_overlaps(plan)) {
        overlaps.push_back({{"region_a", o.region_a},
                            {"region_b", o.region_b},
                            {"begin", o.begin},
                            {"end", o.end},
                            {"winner", o.winner}});
    }
    return overlaps;
}

json ledger_to_json(const CostLedger& ledger) {
    return {{"invoke_count", ledger.invoke_count},
            {"total_invoke_ms", ledger.total_invoke_ms},
            {"bytes_in", ledger.bytes_in},
            {"bytes_out", ledger.bytes_out}};
}

std::vector<std::string> load_labels(const std::string& path, std::size_t n) {
    std::vector<std::string> labels;
    if (!path.empty()) {
        auto bytes = read_file(path);
        std::string text(bytes.begin(), bytes.end());
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t nl = text.find('\n', pos);
            if (nl == std::string::npos) nl = text.size();
            std::string line = text.substr(pos, nl - pos);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) labels.push_back(line);
            pos = nl + 1;
        }
    }
    for (std::size_t i = labels.size(); i < n; ++i) labels.push_back("class_" + std::to_string(i));
    labels.resize(n);
    return labels;
}

EncryptedBlob load_weights_maybe_encrypted(const std::string& path, std::uint64_t key,
                                           std::uint64_t nonce) {
    auto bytes = read_file(path);
    if (bytes.size() >= 4 && bytes[0] == 'T' && bytes[1] == 'Z' && bytes[2] == 'W' &&
        bytes[3] == 'E')
        return blob_from_bytes(bytes);
    // Cleartext container: encrypt on the fly so the streaming path is uniform.
    weight_file_from_bytes(bytes);  // validate the magic/layout first
    return encrypt_weights(bytes, key, nonce);
}

int cmd_plan_memory(const std::string& cfg_path, std::uint64_t tee_core, std::uint64_t total_ram,
                    std::uint64_t shm_bytes) {
    auto start = Clock::now();
    NetworkSpec spec = load_cfg_file(cfg_path);
    MemCost cost = model_memory_cost(spec);
    std::uint64_t tee_ram = tee_ram_size(cost, tee_core);
    MemoryPlan plan = plan_layout(total_ram, tee_ram, shm_bytes);

    json report = {
        {"command", "plan-memory"},
        {"cfg", cfg_path},
        {"param_count", cost.param_count},
        {"m_s_bytes", cost.m_s},
        {"f_gc_bytes", cost.f_gc},
        {"tee_core_bytes", tee_core},
        {"tee_ram_bytes", tee_ram},
        {"tee_ram_mb", static_cast<double>(tee_ram) / (1024.0 * 1024.0)},
        {"num_pgt", plan.num_pgt},
        {"total_ram_bytes", total_ram},
        {"shm_bytes", shm_bytes},
        {"regions", regions_to_json(plan)},
        {"overlaps", overlaps_to_json(plan)},
        {"wall_ms", wall_ms_since(start)},
    };
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_bench_invoke(double secure_mb, bool remap, std::uint64_t count,
                     std::uint64_t payload_bytes) {
    auto start = Clock::now();
    InvokeCostModel model;
    double per_invoke = invoke_cost_ms(model, secure_mb, remap, payload_bytes);
    double open_ms = remap ? 0.0 : model.t_per_mb_ms * secure_mb;
    double total = open_ms + per_invoke * static_cast<double>(count);

    json report = {
        {"command", "bench-invoke"},
        {"secure_mb", secure_mb},
        {"remap", remap},
        {"count", count},
        {"payload_bytes", payload_bytes},
        {"cost_model",
         {{"t_fixed_ms", model.t_fixed_ms},
          {"t_per_mb_ms", model.t_per_mb_ms},
          {"copy_bandwidth", model.copy_bandwidth}}},
        {"per_invoke_ms", per_invoke},
        {"open_ms", open_ms},
        {"slope_ms_per_100mb", model.t_per_mb_ms * 100.0},
        {"simulated_total_ms", total},
        {"wall_ms", wall_ms_since(start)},
    };
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_tune_shm(const std::string& cfg_path, const std::string& weights_path,
                 std::vector<std::uint64_t> units, double alpha, double beta, double threshold,
                 const std::string& key_opt, std::uint64_t total_ram, std::uint64_t tee_core) {
    auto start = Clock::now();
    json report = {{"command", "tune-shm"}, {"threshold", threshold}};

    FitResult fit;
    json points_json = json::array();
    if (alpha > 0.0) {
        // Closed-form mode: take the published fit as given.
        fit.alpha = alpha;
        fit.beta = beta;
        fit.r_squared = 1.0;
    } else {
        if (cfg_path.empty() || weights_path.empty())
            throw DomainError("tune-shm needs a cfg and weights, or --alpha/--beta");
        if (units.empty()) units = default_unit_sweep();
        NetworkSpec spec = load_cfg_file(cfg_path);
        std::uint64_t key = key_from_option_or_env(key_opt);
        EncryptedBlob blob = load_weights_maybe_encrypted(weights_path, key, 1);

        MemCost cost = model_memory_cost(spec);
        std::uint64_t tee_ram = tee_ram_size(cost, tee_core);
        InvokeCostModel model;
        SessionFactory factory = [&](std::uint64_t shm_bytes) {
            MemoryPlan plan = plan_layout(total_ram, tee_ram, shm_bytes);
            return open_session(plan, model, SessionOptions{false, key, false});
        };
        auto points = sweep_transfer(factory, spec, blob, units);
        for (const SweepPoint& p : points)
            points_json.push_back({{"units", p.shm_units}, {"delay_s", p.delay_s}});
        fit = fit_power_law(points);
    }

    OptimalShm opt = optimal_shm_size(fit, threshold);
    report["points"] = points_json;
    report["alpha"] = fit.alpha;
    report["beta"] = fit.beta;
    report["r2"] = fit.r_squared;
    report["optimal_units"] = opt.units;
    report["optimal_bytes"] = opt.bytes;
    report["units_exact"] = opt.units_exact;
    report["predicted_delay_s"] = opt.predicted_delay_s;
    report["wall_ms"] = wall_ms_since(start);
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_infer(const std::string& cfg_path, const std::string& weights_path,
              const std::string& image_path, const std::string& key_opt, std::uint64_t shm_bytes,
              std::size_t top, bool legacy_init, const std::string& labels_path,
              std::uint64_t total_ram, std::uint64_t tee_core) {
    auto start = Clock::now();
    NetworkSpec spec = load_cfg_file(cfg_path);
    std::uint64_t key = key_from_option_or_env(key_opt);
    EncryptedBlob blob = load_weights_maybe_encrypted(weights_path, key, 1);
    Tensor input = load_image(image_path, spec.c, spec.h, spec.w);

    MemCost cost = model_memory_cost(spec);
    std::uint64_t tee_ram = tee_ram_size(cost, tee_core);
    MemoryPlan plan = plan_layout(total_ram, tee_ram, shm_bytes);
    Session session = open_session(plan, InvokeCostModel{}, SessionOptions{false, key, legacy_init});

    double t0 = session.ledger().total_invoke_ms;
    build_remote_network(session, spec);
    double build_ms = session.ledger().total_invoke_ms - t0;

    t0 = session.ledger().total_invoke_ms;
    std::size_t chunks = stream_weights(session, spec, blob, 0);
    double weights_ms = session.ledger().total_invoke_ms - t0;

    t0 = session.ledger().total_invoke_ms;
    send_input(session, input);
    run_infer(session);
    Tensor probs = fetch_result(session, key);
    double infer_ms = session.ledger().total_invoke_ms - t0;

    CostLedger ledger = session.close();

    auto labels = load_labels(labels_path, probs.size());
    auto ranked = top_k(probs, labels, std::min(top, probs.size()));
    json topk = json::array();
    for (const auto& [label, prob] : ranked) topk.push_back({{"label", label}, {"prob", prob}});

    json report = {
        {"command", "infer"},
        {"cfg", cfg_path},
        {"image", image_path},
        {"num_layers", spec.layers.size()},
        {"weight_chunks", chunks},
        {"topk", topk},
        {"ledger", ledger_to_json(ledger)},
        {"phases",
         {{"build_ms_sim", build_ms},
          {"weights_ms_sim", weights_ms},
          {"infer_ms_sim", infer_ms},
          {"open_ms_sim", InvokeCostModel{}.t_per_mb_ms * (static_cast<double>(tee_ram) / (1024.0 * 1024.0))}}},
        {"wall_ms", wall_ms_since(start)},
    };
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_convert(const std::string& manifest_path, const std::string& out_prefix) {
    auto start = Clock::now();
    GenericModel model = load_generic_model(manifest_path);
    CaffeIR ir = lower_to_caffe(model);
    FoldResult folded = fold_to_tinylib(ir);

    std::string cfg_path = out_prefix + ".cfg";
    std::string weights_path = out_prefix + ".weights";
    std::string cfg_text = serialize_cfg(folded.spec);
    write_file(cfg_path, std::span<const std::uint8_t>(
                             reinterpret_cast<const std::uint8_t*>(cfg_text.data()), cfg_text.size()));
    auto weight_bytes = weight_file_to_bytes(folded.weights);
    write_file(weights_path, weight_bytes);

    json report = {
        {"command", "convert"},
        {"manifest", manifest_path},
        {"cfg_path", cfg_path},
        {"weights_path", weights_path},
        {"ir_ops", ir.ops.size()},
        {"layers", folded.spec.layers.size()},
        {"weighted_layers", folded.weights.layer_payloads.size()},
        {"wall_ms", wall_ms_since(start)},
    };
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_encrypt_weights(const std::string& in_path, const std::string& out_path,
                        const std::string& key_opt, std::uint64_t nonce) {
    auto start = Clock::now();
    auto bytes = read_file(in_path);
    weight_file_from_bytes(bytes);  // refuse to encrypt something that is not a weight container
    std::uint64_t key = key_from_option_or_env(key_opt);
    EncryptedBlob blob = encrypt_weights(bytes, key, nonce);
    auto image = blob_to_bytes(blob);
    write_file(out_path, image);

    json report = {
        {"command", "encrypt-weights"},
        {"input", in_path},
        {"output", out_path},
        {"plaintext_bytes", bytes.size()},
        {"encrypted_bytes", image.size()},
        {"nonce", nonce},
        {"checksum", blob.checksum},
        {"wall_ms", wall_ms_since(start)},
    };
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_gen_model(std::uint64_t seed, int layers, const std::string& out_prefix) {
    auto start = Clock::now();
    GeneratedModel gen = gen_model(seed, layers);

    std::string cfg_path = out_prefix + ".cfg";
    std::string weights_path = out_prefix + ".weights";
    std::string cfg_text = serialize_cfg(gen.spec);
    write_file(cfg_path, std::span<const std::uint8_t>(
                             reinterpret_cast<const std::uint8_t*>(cfg_text.data()), cfg_text.size()));
    write_file(weights_path, weight_file_to_bytes(gen.weights));

    json report = {
        {"command", "gen-model"},
        {"seed", seed},
        {"cfg_path", cfg_path},
        {"weights_path", weights_path},
        {"layers", gen.spec.layers.size()},
        {"param_count", total_param_count(gen.spec)},
        {"wall_ms", wall_ms_since(start)},
    };
    std::cout << report.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"TrustZone-style secure DNN inference simulator"};
    app.require_subcommand(1);

    // plan-memory
    std::string pm_cfg;
    std::uint64_t pm_tee_core = 8ull * 1024 * 1024;
    std::uint64_t pm_total_ram = 1024ull * 1024 * 1024;
    std::uint64_t pm_shm = 8ull * 1024 * 1024;
    auto* plan_cmd = app.add_subcommand("plan-memory", "model memory demand and region layout");
    plan_cmd->add_option("cfg", pm_cfg, "model config file")->required();
    plan_cmd->add_option("--tee-core", pm_tee_core, "TEE kernel bytes");
    plan_cmd->add_option("--total-ram", pm_total_ram, "physical RAM bytes");
    plan_cmd->add_option("--shm-bytes", pm_shm, "shared memory bytes");

    // bench-invoke
    double bi_mb = 16.0;
    std::string bi_remap = "on";
    std::uint64_t bi_count = 1;
    std::uint64_t bi_payload = 0;
    auto* bench_cmd = app.add_subcommand("bench-invoke", "invoke cost under the calibrated model");
    bench_cmd->add_option("--secure-mb", bi_mb, "secure memory size in MB");
    bench_cmd->add_option("--remap", bi_remap, "on|off: remap page tables per invoke")
        ->check(CLI::IsMember({"on", "off"}));
    bench_cmd->add_option("--count", bi_count, "number of invokes");
    bench_cmd->add_option("--payload-bytes", bi_payload, "payload copied per invoke");

    // tune-shm
    std::string ts_cfg, ts_weights, ts_key;
    std::vector<std::uint64_t> ts_units;
    double ts_alpha = 0.0, ts_beta = 0.0, ts_threshold = kDefaultDerivativeThreshold;
    std::uint64_t ts_total_ram = 1024ull * 1024 * 1024;
    std::uint64_t ts_tee_core = 8ull * 1024 * 1024;
    auto* tune_cmd = app.add_subcommand("tune-shm", "sweep, fit y=a*x^b, pick the optimal size");
    tune_cmd->add_option("cfg", ts_cfg, "model config file");
    tune_cmd->add_option("weights", ts_weights, "weight container (TZWT or TZWE)");
    tune_cmd->add_option("--units", ts_units, "4KB unit counts to sweep")->delimiter(',');
    tune_cmd->add_option("--alpha", ts_alpha, "skip the sweep, use this fitted alpha");
    tune_cmd->add_option("--beta", ts_beta, "fitted beta for --alpha mode");
    tune_cmd->add_option("--threshold", ts_threshold, "derivative threshold, s per 4KB unit");
    tune_cmd->add_option("--key", ts_key, "decryption key (or TINYZONE_KEY)");
    tune_cmd->add_option("--total-ram", ts_total_ram, "physical RAM bytes");
    tune_cmd->add_option("--tee-core", ts_tee_core, "TEE kernel bytes");

    // infer
    std::string in_cfg, in_weights, in_image, in_key, in_labels;
    std::uint64_t in_shm = 1024 * 1024;
    std::size_t in_top = 5;
    bool in_legacy = false;
    std::uint64_t in_total_ram = 1024ull * 1024 * 1024;
    std::uint64_t in_tee_core = 8ull * 1024 * 1024;
    auto* infer_cmd = app.add_subcommand("infer", "end-to-end secure inference");
    infer_cmd->add_option("cfg", in_cfg, "model config file")->required();
    infer_cmd->add_option("weights", in_weights, "weight container (TZWT or TZWE)")->required();
    infer_cmd->add_option("image", in_image, "PPM P6 image")->required();
    infer_cmd->add_option("--key", in_key, "decryption key (or TINYZONE_KEY)");
    infer_cmd->add_option("--shm-bytes", in_shm, "shared memory bytes");
    infer_cmd->add_option("--top", in_top, "top-k predictions to print");
    infer_cmd->add_flag("--legacy-init", in_legacy, "random-init layers at build (benchmark path)");
    infer_cmd->add_option("--labels", in_labels, "label names, one per line");
    infer_cmd->add_option("--total-ram", in_total_ram, "physical RAM bytes");
    infer_cmd->add_option("--tee-core", in_tee_core, "TEE kernel bytes");

    // convert
    std::string cv_manifest, cv_out;
    auto* convert_cmd = app.add_subcommand("convert", "generic model -> tiny cfg + weights");
    convert_cmd->add_option("manifest", cv_manifest, "generic model manifest JSON")->required();
    convert_cmd->add_option("-o,--output", cv_out, "output prefix")->required();

    // encrypt-weights
    std::string ew_in, ew_out, ew_key;
    std::uint64_t ew_nonce = 1;
    auto* encrypt_cmd = app.add_subcommand("encrypt-weights", "wrap a weight container");
    encrypt_cmd->add_option("input", ew_in, "TZWT weight container")->required();
    encrypt_cmd->add_option("output", ew_out, "encrypted output path")->required();
    encrypt_cmd->add_option("--key", ew_key, "encryption key (or TINYZONE_KEY)");
    encrypt_cmd->add_option("--nonce", ew_nonce, "keystream nonce");

    // gen-model
    std::uint64_t gm_seed = 1;
    int gm_layers = 4;
    std::string gm_out;
    auto* gen_cmd = app.add_subcommand("gen-model", "random shape-valid fixture model");
    gen_cmd->add_option("--seed", gm_seed, "generator seed");
    gen_cmd->add_option("--layers", gm_layers, "body layer count");
    gen_cmd->add_option("-o,--output", gm_out, "output prefix")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (plan_cmd->parsed())
            return cmd_plan_memory(pm_cfg, pm_tee_core, pm_total_ram, pm_shm);
        if (bench_cmd->parsed())
            return cmd_bench_invoke(bi_mb, bi_remap == "on", bi_count, bi_payload);
        if (tune_cmd->parsed())
            return cmd_tune_shm(ts_cfg, ts_weights, ts_units, ts_alpha, ts_beta, ts_threshold,
                                ts_key, ts_total_ram, ts_tee_core);
        if (infer_cmd->parsed())
            return cmd_infer(in_cfg, in_weights, in_image, in_key, in_shm, in_top, in_legacy,
                             in_labels, in_total_ram, in_tee_core);
        if (convert_cmd->parsed()) return cmd_convert(cv_manifest, cv_out);
        if (encrypt_cmd->parsed()) return cmd_encrypt_weights(ew_in, ew_out, ew_key, ew_nonce);
        if (gen_cmd->parsed()) return cmd_gen_model(gm_seed, gm_layers, gm_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
