#include "rtrunc/io.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "rtrunc/error.hpp"

namespace rtrunc::io {

using nlohmann::json;

namespace {

CVec parse_vector(const json& arr)
{
    if (!arr.is_array() || arr.empty()) {
        throw InvalidInput("state must be a nonempty array");
    }
    CVec v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json& e = arr[i];
        if (e.is_number()) {
            v[static_cast<Eigen::Index>(i)] = cplx(e.get<double>(), 0.0);
        } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
            v[static_cast<Eigen::Index>(i)] = cplx(e[0].get<double>(), e[1].get<double>());
        } else {
            throw InvalidInput("state entry " + std::to_string(i) + " is neither a number nor a [re, im] pair");
        }
    }
    return v;
}

json parse_json(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("malformed JSON: ") + e.what());
    }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out)
{
    if (!j.contains(key)) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("config member '") + key + "': " + e.what());
    }
}

} // namespace

std::string format_double(double x)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

StateInput parse_state(const std::string& json_text)
{
    const json j = parse_json(json_text);
    StateInput out;
    if (j.is_array()) {
        out.v = parse_vector(j);
        return out;
    }
    if (!j.is_object()) {
        throw InvalidInput("state JSON must be an array or an object");
    }
    if (j.contains("matrix")) {
        const json& rows = j["matrix"];
        if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
            throw InvalidInput("'matrix' must be a nonempty array of rows");
        }
        json flat = json::array();
        const std::size_t cols = rows[0].size();
        for (const auto& row : rows) {
            if (!row.is_array() || row.size() != cols) {
                throw InvalidInput("'matrix' rows must all have the same length");
            }
            for (const auto& e : row) {
                flat.push_back(e);
            }
        }
        out.v = parse_vector(flat);
        out.a = static_cast<int>(rows.size());
        out.b = static_cast<int>(cols);
    } else if (j.contains("v")) {
        out.v = parse_vector(j["v"]);
    } else if (j.contains("state")) {
        out.v = parse_vector(j["state"]);
    } else {
        throw InvalidInput("state JSON object needs a 'v' member");
    }
    read_opt(j, "a", out.a);
    read_opt(j, "b", out.b);
    return out;
}

StateInput read_state(const std::string& path)
{
    return parse_state(read_file(path));
}

mps::ExperimentConfig parse_experiment_config(const std::string& json_text)
{
    const json j = parse_json(json_text);
    if (!j.is_object()) {
        throw InvalidInput("experiment config must be a JSON object");
    }
    mps::ExperimentConfig c;
    read_opt(j, "n", c.n);
    read_opt(j, "max_bond", c.max_bond);
    read_opt(j, "gammas", c.gammas);
    read_opt(j, "D", c.D);
    read_opt(j, "target_fidelity", c.target_fidelity);
    read_opt(j, "seeds", c.seeds);
    read_opt(j, "samples", c.samples);
    read_opt(j, "site", c.site);
    if (j.contains("strategies")) {
        std::vector<std::string> names;
        read_opt(j, "strategies", names);
        c.strategies.clear();
        for (const auto& s : names) {
            c.strategies.push_back(mps::strategy_from_string(s));
        }
    }
    return c;
}

powerlaw::SweepConfig parse_sweep_config(const std::string& json_text)
{
    const json j = parse_json(json_text);
    if (!j.is_object()) {
        throw InvalidInput("sweep config must be a JSON object");
    }
    powerlaw::SweepConfig c;
    read_opt(j, "gammas", c.gammas);
    read_opt(j, "d", c.d);
    read_opt(j, "ks", c.ks);
    read_opt(j, "seed", c.seed);
    read_opt(j, "fit_points", c.fit_points);
    return c;
}

void write_matrix_csv(std::ostream& os, const RMat& m)
{
    os << kCsvHeader << "\n# real " << m.rows() << "x" << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            os << (j ? "," : "") << format_double(m(i, j));
        }
        os << "\n";
    }
}

void write_matrix_csv(std::ostream& os, const CMat& m)
{
    os << kCsvHeader << "\n# complex " << m.rows() << "x" << m.cols() << " as re,im pairs\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            os << (j ? "," : "") << format_double(m(i, j).real()) << "," << format_double(m(i, j).imag());
        }
        os << "\n";
    }
}

void write_sweep_csv(std::ostream& os, const std::vector<powerlaw::SweepRow>& rows)
{
    os << kCsvHeader << "\ngamma,d,k,epsilon,T_k,R_k,exponent\n";
    for (const auto& r : rows) {
        os << format_double(r.gamma) << "," << r.d << "," << r.k << "," << format_double(r.epsilon) << ","
           << format_double(r.T) << "," << format_double(r.R) << "," << format_double(r.exponent) << "\n";
    }
}

void write_experiment_csv(std::ostream& os, const std::vector<mps::ExperimentRecord>& rows)
{
    os << kCsvHeader << "\ngamma,D,seed,strategy,estimate,exact,samples,sample_std,dtrunc_fidelity\n";
    for (const auto& r : rows) {
        os << format_double(r.gamma) << "," << r.D << "," << r.seed << "," << mps::to_string(r.strategy) << ","
           << format_double(r.estimate) << "," << format_double(r.exact) << "," << r.sample_count << ","
           << format_double(r.sample_std) << "," << format_double(r.dtrunc_fidelity) << "\n";
    }
}

void write_text(const std::string& path, const std::string& text)
{
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidInput("cannot write " + path);
    }
    out << text;
}

} // namespace rtrunc::io
