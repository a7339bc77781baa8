#include "imls/config.hpp"

#include <fstream>
#include <stdexcept>

namespace imls {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double parsed = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return parsed;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad numeric value for '" + key + "': " + v);
    }
}

int to_int(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d)
        throw std::invalid_argument("config: expected integer for '" + key + "': " + v);
    return i;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw std::invalid_argument("config: expected boolean for '" + key + "': " + v);
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected key=value at line " +
                                     std::to_string(line_no));
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

void apply_config(ReconstructionConfig& cfg, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "resolution")
            cfg.resolution = to_int(key, value);
        else if (key == "steps")
            cfg.steps = to_int(key, value);
        else if (key == "supervision_samples")
            cfg.supervision_samples = to_int(key, value);
        else if (key == "background_sdf")
            cfg.background_sdf = to_double(key, value);
        else if (key == "lr_position")
            cfg.lr.position = to_double(key, value);
        else if (key == "lr_normal")
            cfg.lr.normal = to_double(key, value);
        else if (key == "lr_k")
            cfg.lr.k = to_double(key, value);
        else if (key == "lr_m")
            cfg.lr.m = to_double(key, value);
        else if (key == "lr_feature")
            cfg.lr.feature = to_double(key, value);
        else if (key == "alpha0")
            cfg.filter.alpha = to_double(key, value);
        else if (key == "lambda_lap")
            cfg.filter.lambda_lap = to_double(key, value);
        else if (key == "mc_samples")
            cfg.filter.mc_samples = to_int(key, value);
        else if (key == "anneal_fraction")
            cfg.filter.anneal_fraction = to_double(key, value);
        else if (key == "seed")
            cfg.filter.seed = static_cast<std::uint64_t>(to_double(key, value));
        else if (key == "dim_corrected")
            cfg.filter.dim_corrected = to_bool(key, value);
        else if (key == "loss_kind") {
            if (value == "sdf_l1")
                cfg.loss_kind = LossKind::sdf_l1;
            else if (value == "sdf_l2")
                cfg.loss_kind = LossKind::sdf_l2;
            else
                throw std::invalid_argument("config: unknown loss_kind '" + value + "'");
        } else if (key == "kernel_kind") {
            if (value == "compact")
                cfg.kernel_kind = KernelKind::compact;
            else if (value == "exponential")
                cfg.kernel_kind = KernelKind::exponential;
            else
                throw std::invalid_argument("config: unknown kernel_kind '" + value + "'");
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
}

}  // namespace imls
