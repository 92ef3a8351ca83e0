#include "retina/params.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "retina/error.hpp"

namespace retina {

namespace {

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& value, const std::string& key, const std::string& origin) {
    double out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        fail(ErrorCode::format, origin + ": invalid numeric value '" + value + "' for key '" + key + "'");
    return out;
}

int parse_int(const std::string& value, const std::string& key, const std::string& origin) {
    int out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        fail(ErrorCode::format, origin + ": invalid integer value '" + value + "' for key '" + key + "'");
    return out;
}

using Setter = std::function<void(RcaParams&, const std::string&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    auto dbl = [](double RcaParams::* field) {
        return [field](RcaParams& p, const std::string& v, const std::string& key, const std::string& o) {
            p.*field = parse_double(v, key, o);
        };
    };
    auto integer = [](int RcaParams::* field) {
        return [field](RcaParams& p, const std::string& v, const std::string& key, const std::string& o) {
            p.*field = parse_int(v, key, o);
        };
    };
    static const std::map<std::string, Setter> table = {
        {"theta_p", dbl(&RcaParams::theta_p)},
        {"g_p", dbl(&RcaParams::g_p)},
        {"kh_size", integer(&RcaParams::kh_size)},
        {"kh_sigma", dbl(&RcaParams::kh_sigma)},
        {"sigma_h", dbl(&RcaParams::sigma_h)},
        {"theta_b", dbl(&RcaParams::theta_b)},
        {"g_b", dbl(&RcaParams::g_b)},
        {"alpha", dbl(&RcaParams::alpha)},
        {"beta", dbl(&RcaParams::beta)},
        {"gamma_a", dbl(&RcaParams::gamma_a)},
        {"gamma_tau", dbl(&RcaParams::gamma_tau)},
        {"g_m", dbl(&RcaParams::g_m)},
        {"theta_m", dbl(&RcaParams::theta_m)},
        {"eta_m", dbl(&RcaParams::eta_m)},
        {"gamma_p", dbl(&RcaParams::gamma_p)},
        {"dog_size_param", integer(&RcaParams::dog_size_param)},
        {"dog_sigma1", dbl(&RcaParams::dog_sigma1)},
        {"dog_sigma2", dbl(&RcaParams::dog_sigma2)},
        {"dog_w_surr", dbl(&RcaParams::dog_w_surr)},
        {"bilateral_d", integer(&RcaParams::bilateral_d)},
        {"bilateral_sigma_color", dbl(&RcaParams::bilateral_sigma_color)},
        {"bilateral_sigma_space", dbl(&RcaParams::bilateral_sigma_space)},
    };
    return table;
}

void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::parameter, "invalid parameter: " + what);
}

}  // namespace

void params_validate(const RcaParams& p) {
    require(p.theta_p >= 0.0, "theta_p must be >= 0");
    require(p.g_p > 0.0, "g_p must be > 0");
    require(p.kh_size >= 1 && p.kh_size % 2 == 1, "kh_size must be odd and positive");
    require(p.kh_sigma > 0.0, "kh_sigma must be > 0");
    require(p.sigma_h > 0.0, "sigma_h must be > 0");
    require(p.theta_b >= 0.0, "theta_b must be >= 0");
    require(p.g_b > 0.0, "g_b must be > 0");
    require(p.alpha >= 0.0 && p.alpha < 1.0, "alpha must lie in [0,1)");
    require(p.beta > 0.0, "beta must be > 0");
    require(p.gamma_a > 0.0, "gamma_a must be > 0");
    require(p.gamma_tau > 0.0, "gamma_tau must be > 0");
    require(p.g_m > 0.0, "g_m must be > 0");
    require(p.theta_m >= 0.0, "theta_m must be >= 0");
    require(p.eta_m >= 0.0 && p.eta_m <= 1.0, "eta_m must lie in [0,1]");
    require(p.gamma_p > 0.0, "gamma_p must be > 0");
    require(p.dog_size_param >= 1, "dog_size_param must be >= 1");
    require(p.dog_sigma1 > 0.0, "dog_sigma1 must be > 0");
    require(p.dog_sigma2 > 0.0, "dog_sigma2 must be > 0");
    require(p.bilateral_d >= 1 && p.bilateral_d % 2 == 1, "bilateral_d must be odd and positive");
    require(p.bilateral_sigma_color > 0.0, "bilateral_sigma_color must be > 0");
    require(p.bilateral_sigma_space > 0.0, "bilateral_sigma_space must be > 0");
}

RcaParams params_from_stream(std::istream& in, RcaParams base, const std::string& origin) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        auto eq = text.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::format,
                 origin + ":" + std::to_string(line_no) + ": expected key=value, got '" + text + "'");
        std::string key = trim(text.substr(0, eq));
        std::string value = trim(text.substr(eq + 1));
        auto it = setters().find(key);
        if (it == setters().end())
            fail(ErrorCode::parameter,
                 origin + ":" + std::to_string(line_no) + ": unknown parameter key '" + key + "'");
        it->second(base, value, key, origin + ":" + std::to_string(line_no));
    }
    params_validate(base);
    return base;
}

RcaParams params_from_file(const std::filesystem::path& path, RcaParams base) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open params file " + path.string());
    return params_from_stream(in, base, path.string());
}

std::string params_to_config(const RcaParams& p) {
    std::ostringstream out;
    char buf[64];
    auto put_dbl = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << key << "=" << buf << "\n";
    };
    auto put_int = [&](const char* key, int v) { out << key << "=" << v << "\n"; };
    out << "# RCA parameter snapshot\n";
    put_dbl("theta_p", p.theta_p);
    put_dbl("g_p", p.g_p);
    put_int("kh_size", p.kh_size);
    put_dbl("kh_sigma", p.kh_sigma);
    put_dbl("sigma_h", p.sigma_h);
    put_dbl("theta_b", p.theta_b);
    put_dbl("g_b", p.g_b);
    put_dbl("alpha", p.alpha);
    put_dbl("beta", p.beta);
    put_dbl("gamma_a", p.gamma_a);
    put_dbl("gamma_tau", p.gamma_tau);
    put_dbl("g_m", p.g_m);
    put_dbl("theta_m", p.theta_m);
    put_dbl("eta_m", p.eta_m);
    put_dbl("gamma_p", p.gamma_p);
    put_int("dog_size_param", p.dog_size_param);
    put_dbl("dog_sigma1", p.dog_sigma1);
    put_dbl("dog_sigma2", p.dog_sigma2);
    put_dbl("dog_w_surr", p.dog_w_surr);
    put_int("bilateral_d", p.bilateral_d);
    put_dbl("bilateral_sigma_color", p.bilateral_sigma_color);
    put_dbl("bilateral_sigma_space", p.bilateral_sigma_space);
    return out.str();
}

}  // namespace retina
