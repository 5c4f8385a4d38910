#include "etvd/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace etvd {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& what) {
    throw std::invalid_argument("config: " + what);
}

int to_int(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        int out = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return out;
    } catch (...) {
        bad("invalid integer for " + key + ": '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return out;
    } catch (...) {
        bad("invalid number for " + key + ": '" + v + "'");
    }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        uint64_t out = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return out;
    } catch (...) {
        bad("invalid unsigned integer for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad("invalid boolean for " + key + ": '" + v + "'");
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') bad("unterminated section header at line " +
                                        std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            bad("expected key=value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string qual = section + "." + key;

        if (qual == "network.blocks") cfg.network.blocks = to_int(qual, value);
        else if (qual == "network.channels") cfg.network.channels = to_int(qual, value);
        else if (qual == "network.in_channels") cfg.network.in_channels = to_int(qual, value);
        else if (qual == "network.alpha") cfg.network.alpha = to_double(qual, value);
        else if (qual == "train.epochs") cfg.train.epochs = to_int(qual, value);
        else if (qual == "train.batch_size") cfg.train.batch_size = to_int(qual, value);
        else if (qual == "train.lr") cfg.train.sgd.lr = to_double(qual, value);
        else if (qual == "train.lr_late") cfg.train.sgd.lr_late = to_double(qual, value);
        else if (qual == "train.lr_switch_epoch") cfg.train.sgd.switch_epoch = to_int(qual, value);
        else if (qual == "train.momentum") cfg.train.sgd.momentum = to_double(qual, value);
        else if (qual == "train.weight_decay") cfg.train.sgd.weight_decay = to_double(qual, value);
        else if (qual == "train.beta") cfg.train.loss.beta = to_double(qual, value);
        else if (qual == "train.beta_late") cfg.train.loss.beta_late = to_double(qual, value);
        else if (qual == "train.beta_switch_epoch") cfg.train.loss.switch_epoch = to_int(qual, value);
        else if (qual == "train.tv_eps") cfg.train.loss.tv_eps = to_double(qual, value);
        else if (qual == "train.patch_size") cfg.patch_size = to_int(qual, value);
        else if (qual == "train.patch_stride") cfg.patch_stride = to_int(qual, value);
        else if (qual == "noise.mode") {
            if (value == "fixed") cfg.noise.mode = NoiseMode::kFixed;
            else if (value == "randomized") cfg.noise.mode = NoiseMode::kRandomized;
            else bad("noise.mode must be fixed or randomized, got '" + value + "'");
        }
        else if (qual == "noise.sigma") cfg.noise.sigma = to_double(qual, value);
        else if (qual == "noise.range_lo") cfg.noise.range_lo = to_double(qual, value);
        else if (qual == "noise.range_hi") cfg.noise.range_hi = to_double(qual, value);
        else if (qual == "glcm.levels") cfg.glcm.levels = to_int(qual, value);
        else if (qual == "glcm.offset_dy") cfg.glcm.offset_dy = to_int(qual, value);
        else if (qual == "glcm.offset_dx") cfg.glcm.offset_dx = to_int(qual, value);
        else if (qual == "glcm.symmetric") cfg.glcm.symmetric = to_bool(qual, value);
        else if (qual == "experiment.trials_per_image") cfg.trials_per_image = to_int(qual, value);
        else if (qual == "experiment.filter_size") cfg.exp_filter_size = to_int(qual, value);
        else if (qual == "experiment.alpha") cfg.exp_alpha = to_double(qual, value);
        else if (qual == "paths.train_manifest") cfg.train_manifest = value;
        else if (qual == "paths.eval_manifest") cfg.eval_manifest = value;
        else if (qual == "paths.checkpoint") cfg.checkpoint = value;
        else if (qual == "paths.out_dir") cfg.out_dir = value;
        else if (qual == "run.seed") cfg.seed = to_u64(qual, value);
        else bad("unknown key '" + qual + "' at line " + std::to_string(lineno));
    }
    cfg.propagate_seed();
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open config");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string RunConfig::serialize() const {
    std::ostringstream out;
    out << "[network]\n";
    out << "blocks = " << network.blocks << "\n";
    out << "channels = " << network.channels << "\n";
    out << "in_channels = " << network.in_channels << "\n";
    out << "alpha = " << fmt_double(network.alpha) << "\n";
    out << "\n[train]\n";
    out << "epochs = " << train.epochs << "\n";
    out << "batch_size = " << train.batch_size << "\n";
    out << "lr = " << fmt_double(train.sgd.lr) << "\n";
    out << "lr_late = " << fmt_double(train.sgd.lr_late) << "\n";
    out << "lr_switch_epoch = " << train.sgd.switch_epoch << "\n";
    out << "momentum = " << fmt_double(train.sgd.momentum) << "\n";
    out << "weight_decay = " << fmt_double(train.sgd.weight_decay) << "\n";
    out << "beta = " << fmt_double(train.loss.beta) << "\n";
    out << "beta_late = " << fmt_double(train.loss.beta_late) << "\n";
    out << "beta_switch_epoch = " << train.loss.switch_epoch << "\n";
    out << "tv_eps = " << fmt_double(train.loss.tv_eps) << "\n";
    out << "patch_size = " << patch_size << "\n";
    out << "patch_stride = " << patch_stride << "\n";
    out << "\n[noise]\n";
    out << "mode = " << (noise.mode == NoiseMode::kFixed ? "fixed" : "randomized") << "\n";
    out << "sigma = " << fmt_double(noise.sigma) << "\n";
    out << "range_lo = " << fmt_double(noise.range_lo) << "\n";
    out << "range_hi = " << fmt_double(noise.range_hi) << "\n";
    out << "\n[glcm]\n";
    out << "levels = " << glcm.levels << "\n";
    out << "offset_dy = " << glcm.offset_dy << "\n";
    out << "offset_dx = " << glcm.offset_dx << "\n";
    out << "symmetric = " << (glcm.symmetric ? "true" : "false") << "\n";
    out << "\n[experiment]\n";
    out << "trials_per_image = " << trials_per_image << "\n";
    out << "filter_size = " << exp_filter_size << "\n";
    out << "alpha = " << fmt_double(exp_alpha) << "\n";
    out << "\n[paths]\n";
    if (!train_manifest.empty()) out << "train_manifest = " << train_manifest << "\n";
    if (!eval_manifest.empty()) out << "eval_manifest = " << eval_manifest << "\n";
    if (!checkpoint.empty()) out << "checkpoint = " << checkpoint << "\n";
    out << "out_dir = " << out_dir << "\n";
    out << "\n[run]\n";
    out << "seed = " << seed << "\n";
    return out.str();
}

void RunConfig::propagate_seed() {
    network.seed = mix_seed(seed, 0x4E7);   // weight init stream
    train.seed = seed;
    noise.seed = mix_seed(seed, 0x4015E);   // noise stream
}

}  // namespace etvd
