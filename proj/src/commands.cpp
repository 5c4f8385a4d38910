#include "etvd/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "etvd/checkpoint.hpp"
#include "etvd/config.hpp"
#include "etvd/data.hpp"
#include "etvd/gradcheck.hpp"
#include "etvd/network.hpp"
#include "etvd/texture.hpp"
#include "etvd/train.hpp"

namespace etvd {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const char* kUsage =
    "usage: etvd <command> [options]\n"
    "\n"
    "commands:\n"
    "  train      --config PATH [--seed U64] [--out DIR]\n"
    "             [--resume CKPT --start-epoch N]\n"
    "  denoise    --checkpoint PATH --input IMG --output IMG [--reference IMG]\n"
    "  eval       --checkpoint PATH --manifest PATH [--sigma S] [--seed U64]\n"
    "  asm-bench  --manifest PATH [--config PATH] [--out DIR] [--sigma S]\n"
    "             [--trials N] [--seed U64]\n"
    "  gradcheck  [--scope layer|network|loss|all] [--seed U64] [--seeds N]\n"
    "             [--corrupt]\n"
    "\n"
    "exit codes: 0 success, 1 usage error, 2 runtime/numerical failure\n";

// Flags are --key value pairs plus boolean switches; anything unknown is a
// usage error.
struct Args {
    std::map<std::string, std::string> values;
    std::map<std::string, bool> switches;

    static Args parse(int argc, const char* const* argv, int start,
                      const std::vector<std::string>& value_keys,
                      const std::vector<std::string>& switch_keys) {
        Args a;
        for (int i = start; i < argc; ++i) {
            const std::string arg = argv[i];
            bool matched = false;
            for (const auto& k : switch_keys)
                if (arg == "--" + k) {
                    a.switches[k] = true;
                    matched = true;
                    break;
                }
            if (matched) continue;
            for (const auto& k : value_keys)
                if (arg == "--" + k) {
                    if (i + 1 >= argc) throw UsageError("missing value for " + arg);
                    a.values[k] = argv[++i];
                    matched = true;
                    break;
                }
            if (!matched) throw UsageError("unknown option '" + arg + "'");
        }
        return a;
    }

    std::optional<std::string> get(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) return std::nullopt;
        return it->second;
    }
    std::string require(const std::string& key) const {
        auto v = get(key);
        if (!v) throw UsageError("missing required option --" + key);
        return *v;
    }
    bool has(const std::string& key) const {
        auto it = switches.find(key);
        return it != switches.end() && it->second;
    }
};

uint64_t parse_seed(const std::string& s) {
    try {
        size_t used = 0;
        uint64_t v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw UsageError("invalid --seed value '" + s + "'");
    }
}

double parse_flag_double(const std::string& name, const std::string& s) {
    try {
        size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw UsageError("invalid --" + name + " value '" + s + "'");
    }
}

int parse_flag_int(const std::string& name, const std::string& s) {
    try {
        size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw UsageError("invalid --" + name + " value '" + s + "'");
    }
}

// Loads a manifest's images in the channel layout the network expects:
// color sources are converted to gray for 1-channel networks, gray sources
// cannot feed a color network.
std::vector<NamedImage> load_images(const std::vector<std::string>& paths, int in_channels) {
    std::vector<NamedImage> out;
    out.reserve(paths.size());
    for (const auto& p : paths) {
        Image img = read_image(p);
        if (in_channels == 1 && img.channels == 3) img = to_gray(img);
        if (img.channels != in_channels)
            throw std::runtime_error(p + ": has " + std::to_string(img.channels) +
                                     " channels, expected " + std::to_string(in_channels));
        out.push_back({p, std::move(img)});
    }
    return out;
}

RunConfig config_from_args(const Args& args, bool config_required) {
    RunConfig cfg;
    if (auto path = args.get("config"))
        cfg = RunConfig::load(*path);
    else if (config_required)
        throw UsageError("missing required option --config");
    if (auto seed = args.get("seed")) {
        cfg.seed = parse_seed(*seed);
        cfg.propagate_seed();
    }
    if (auto out = args.get("out")) cfg.out_dir = *out;
    return cfg;
}

int cmd_train(int argc, const char* const* argv) {
    Args args = Args::parse(argc, argv, 2, {"config", "seed", "out", "resume", "start-epoch"},
                            {});
    RunConfig cfg = config_from_args(args, /*config_required=*/true);
    if (cfg.train_manifest.empty())
        throw UsageError("config is missing paths.train_manifest");

    auto train_paths = load_manifest(cfg.train_manifest);
    if (train_paths.empty()) throw std::runtime_error("train manifest is empty");
    if (!cfg.eval_manifest.empty())
        require_disjoint_manifests(train_paths, load_manifest(cfg.eval_manifest));

    auto images = load_images(train_paths, cfg.network.in_channels);
    std::vector<Image> plain;
    plain.reserve(images.size());
    for (auto& ni : images) plain.push_back(std::move(ni.image));

    NoiseSpec noise = cfg.noise;
    PatchDataset data = build_patch_dataset(plain, cfg.patch_size, cfg.patch_stride, noise,
                                            mix_seed(cfg.seed, 0x9A7C));
    std::printf("dataset: %zu patches of %dx%d from %zu images\n", data.size(),
                cfg.patch_size, cfg.patch_size, plain.size());

    int start_epoch = 0;
    ResidualDenoiser<float> net = [&] {
        if (auto resume = args.get("resume")) {
            start_epoch = parse_flag_int("start-epoch", args.get("start-epoch").value_or("0"));
            return load_checkpoint(*resume);
        }
        return ResidualDenoiser<float>(cfg.network);
    }();

    TrainResult result = train_model(net, data, cfg.train, cfg.out_dir,
                                     [](const std::string& line) { std::puts(line.c_str()); },
                                     start_epoch);
    std::printf("trained %zu epochs, final mean loss %.6f, checkpoints in %s\n",
                result.epochs.size(), result.epochs.back().mean_loss, cfg.out_dir.c_str());
    return 0;
}

int cmd_denoise(int argc, const char* const* argv) {
    Args args = Args::parse(argc, argv, 2, {"checkpoint", "input", "output", "reference"}, {});
    ResidualDenoiser<float> net = load_checkpoint(args.require("checkpoint"));
    Image input = read_image(args.require("input"));
    if (input.channels != net.config().in_channels)
        throw std::runtime_error("input has " + std::to_string(input.channels) +
                                 " channels, checkpoint expects " +
                                 std::to_string(net.config().in_channels));

    Tensor<double> yd = image_to_tensor(input);
    Tensor<float> y(yd.shape());
    for (size_t i = 0; i < yd.size(); ++i) y[i] = static_cast<float>(yd[i]);
    Tensor<float> x_hat = net.denoise(y);

    Tensor<double> outd(x_hat.shape());
    for (size_t i = 0; i < x_hat.size(); ++i) outd[i] = x_hat[i];
    const std::string out_path = args.require("output");
    write_image(out_path, tensor_to_image(outd, /*clamp=*/true));
    std::printf("wrote %s\n", out_path.c_str());

    if (auto ref_path = args.get("reference")) {
        Image ref = read_image(*ref_path);
        const double noisy_psnr = psnr(ref, input);
        // score the file as written, after 8-bit quantization
        const double out_psnr = psnr(ref, read_image(out_path));
        std::printf("psnr_noisy=%g psnr_denoised=%g\n", noisy_psnr, out_psnr);
    }
    return 0;
}

int cmd_eval(int argc, const char* const* argv) {
    Args args = Args::parse(argc, argv, 2, {"checkpoint", "manifest", "sigma", "seed"}, {});
    ResidualDenoiser<float> net = load_checkpoint(args.require("checkpoint"));
    auto paths = load_manifest(args.require("manifest"));
    if (paths.empty()) throw std::runtime_error("eval manifest is empty");
    const double sigma = parse_flag_double("sigma", args.get("sigma").value_or("25"));
    const uint64_t seed = args.get("seed") ? parse_seed(*args.get("seed")) : kDefaultSeed;

    auto images = load_images(paths, net.config().in_channels);
    std::printf("# image noisy_psnr denoised_psnr\n");
    double sum_noisy = 0.0, sum_denoised = 0.0;
    for (size_t i = 0; i < images.size(); ++i) {
        NoiseSpec spec;
        spec.sigma = sigma;
        spec.seed = mix_seed(seed, i);  // deterministic per image index
        NoisyImage noisy = add_gaussian_noise(images[i].image, spec);

        Tensor<float> y(noisy.noisy.shape());
        for (size_t j = 0; j < y.size(); ++j) y[j] = static_cast<float>(noisy.noisy[j]);
        Tensor<float> x_hat = net.denoise(y);
        // scored on the 8-bit grid, i.e. the image a denoise run would write
        Tensor<double> x_hat_d(x_hat.shape());
        for (size_t j = 0; j < x_hat.size(); ++j)
            x_hat_d[j] = std::round(static_cast<double>(x_hat[j]) * 255.0) / 255.0;

        Tensor<double> clean = image_to_tensor(images[i].image);
        const double noisy_psnr = psnr(clean, noisy.noisy);
        const double out_psnr = psnr(clean, x_hat_d);
        sum_noisy += noisy_psnr;
        sum_denoised += out_psnr;
        std::printf("%s %g %g\n", images[i].name.c_str(), noisy_psnr, out_psnr);
    }
    std::printf("mean %g %g\n", sum_noisy / images.size(), sum_denoised / images.size());
    return 0;
}

int cmd_asm_bench(int argc, const char* const* argv) {
    Args args =
        Args::parse(argc, argv, 2, {"manifest", "config", "out", "sigma", "trials", "seed"}, {});
    RunConfig cfg = config_from_args(args, /*config_required=*/false);

    AsmExperimentConfig exp;
    exp.sigma = cfg.noise.sigma;
    exp.alpha = cfg.exp_alpha;
    exp.filter_size = cfg.exp_filter_size;
    exp.trials_per_image = cfg.trials_per_image;
    exp.seed = cfg.seed;
    exp.glcm = cfg.glcm;
    if (auto s = args.get("sigma")) exp.sigma = parse_flag_double("sigma", *s);
    if (auto t = args.get("trials")) exp.trials_per_image = parse_flag_int("trials", *t);
    if (auto s = args.get("seed")) exp.seed = parse_seed(*s);

    auto paths = load_manifest(args.require("manifest"));
    if (paths.empty()) throw std::runtime_error("manifest is empty");
    auto images = load_images(paths, 1);

    AsmExperimentResult result = asm_experiment(images, exp);

    fs::create_directories(cfg.out_dir);
    const std::string csv_path = (fs::path(cfg.out_dir) / "asm_bench.csv").string();
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error(csv_path + ": cannot open for writing");
    csv << "image_path,trial,sigma,asm_elu,asm_relu,elu_lower\n";
    for (const auto& row : result.rows) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), ",%d,%g,%.10g,%.10g,%d\n", row.trial, row.sigma,
                      row.asm_elu, row.asm_relu, row.elu_lower ? 1 : 0);
        csv << row.image << buf;
    }
    const long total = result.count_elu_lower + result.count_elu_higher + result.count_ties;
    csv << "SUMMARY," << total << "," << exp.sigma << ",,," << result.fraction_elu_lower
        << "\n";
    csv.close();

    std::printf("trials=%ld elu_lower=%ld elu_higher=%ld ties=%ld\n", total,
                result.count_elu_lower, result.count_elu_higher, result.count_ties);
    std::printf("fraction_elu_lower=%.4f\n", result.fraction_elu_lower);
    std::printf("wrote %s\n", csv_path.c_str());
    return 0;
}

int cmd_gradcheck(int argc, const char* const* argv) {
    Args args = Args::parse(argc, argv, 2, {"scope", "seed", "seeds"}, {"corrupt"});
    const std::string scope_name = args.get("scope").value_or("all");
    GradCheckScope scope;
    if (scope_name == "layer") scope = GradCheckScope::kLayer;
    else if (scope_name == "network") scope = GradCheckScope::kNetwork;
    else if (scope_name == "loss") scope = GradCheckScope::kLoss;
    else if (scope_name == "all") scope = GradCheckScope::kAll;
    else throw UsageError("invalid --scope '" + scope_name + "'");
    const uint64_t seed = args.get("seed") ? parse_seed(*args.get("seed")) : kDefaultSeed;
    const int seeds = parse_flag_int("seeds", args.get("seeds").value_or("10"));

    GradCheckReport report = run_gradcheck(scope, seed, seeds, args.has("corrupt"));
    for (const auto& c : report.cases)
        std::printf("%-12s max_rel_err=%.3e tolerance=%.0e %s\n", c.name.c_str(),
                    c.max_rel_err, c.tolerance, c.pass ? "PASS" : "FAIL");
    std::printf("gradcheck: %s\n", report.all_pass ? "PASS" : "FAIL");
    if (!report.all_pass)
        throw std::runtime_error("gradient check failed");
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    try {
        if (argc < 2) throw UsageError("no command given");
        const std::string command = argv[1];
        if (command == "train") return cmd_train(argc, argv);
        if (command == "denoise") return cmd_denoise(argc, argv);
        if (command == "eval") return cmd_eval(argc, argv);
        if (command == "asm-bench") return cmd_asm_bench(argc, argv);
        if (command == "gradcheck") return cmd_gradcheck(argc, argv);
        if (command == "--help" || command == "help") {
            std::fputs(kUsage, stdout);
            return 0;
        }
        throw UsageError("unknown command '" + command + "'");
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n\n%s", e.what(), kUsage);
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

}  // namespace etvd
