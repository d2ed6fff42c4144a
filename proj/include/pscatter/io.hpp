// pscatter: file formats and report emission.
//
// All formats are line-oriented and self-describing; '#' starts a comment.
// Doubles print with 17 significant digits so every emitted file re-ingests
// to bit-identical values ("inf" and "-inf" are legal tokens).
//
//   group file      key = value lines: label, z0 (two reals), generator
//                   (repeatable, bracketed row-major 2x2 matrix)
//   spectrum csv    "area = <v>" then "lambda,mult,weight" rows
//   orbit csv       metadata lines then "length,mult" rows
//   perturbed csv   "lambda_max = <v>" then
//                   "lambda,mult,weight,type,bracket_lo,bracket_hi" rows,
//                   type in {ground, new, inherited}
//   report          ordered "key = value" lines
#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pscatter/common.hpp"
#include "pscatter/fuchsian.hpp"
#include "pscatter/hyperbolic.hpp"
#include "pscatter/solver.hpp"
#include "pscatter/spectral.hpp"

namespace pscatter {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline bool blank_or_comment(const std::string& line) {
    const std::string t = trim(line);
    return t.empty() || t[0] == '#';
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// "key = value" -> (key, value), both trimmed
inline bool parse_kv(const std::string& line, std::string& key, std::string& value) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) return false;
    key = trim(line.substr(0, eq));
    value = trim(line.substr(eq + 1));
    return !key.empty();
}

struct LineReader {
    std::ifstream in;
    std::string path;
    long lineno = 0;

    explicit LineReader(const std::string& p) : in(p), path(p) {
        if (!in) throw std::runtime_error("cannot open " + p);
    }
    bool next(std::string& line) {
        while (std::getline(in, line)) {
            ++lineno;
            if (!blank_or_comment(line)) return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + what);
    }
};

inline void write_or_throw(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    if (!out.good()) throw std::runtime_error("write failed for " + path);
}

}  // namespace detail

// ---- group files ----------------------------------------------------------

inline GroupSpec read_group(const std::string& path) {
    detail::LineReader rd(path);
    GroupSpec spec;
    bool has_z0 = false;
    std::string line, key, value;
    while (rd.next(line)) {
        if (!detail::parse_kv(line, key, value)) rd.fail("expected key = value");
        if (key == "label") {
            spec.label = value;
        } else if (key == "z0") {
            std::istringstream ss(value);
            double x = 0.0, y = 0.0;
            if (!(ss >> x >> y)) rd.fail("z0 needs two reals");
            spec.z0 = HPoint{x, y};
            has_z0 = true;
        } else if (key == "generator") {
            if (value.size() < 2 || value.front() != '[' || value.back() != ']')
                rd.fail("generator needs a bracketed 2x2 matrix");
            std::istringstream ss(value.substr(1, value.size() - 2));
            double a, b, c, d;
            if (!(ss >> a >> b >> c >> d)) rd.fail("generator needs four reals");
            try {
                spec.generators.push_back(MoebiusMap(a, b, c, d));
            } catch (const std::exception& e) {
                rd.fail(e.what());
            }
        } else {
            rd.fail("unknown key '" + key + "'");
        }
    }
    if (!has_z0) throw std::runtime_error(path + ": missing z0");
    spec.validate();
    return spec;
}

inline std::string format_group(const GroupSpec& spec) {
    std::string out;
    out += "label = " + spec.label + "\n";
    out += "z0 = " + fmt_g17(spec.z0.x) + " " + fmt_g17(spec.z0.y) + "\n";
    for (const auto& g : spec.generators)
        out += "generator = [" + fmt_g17(g.a) + " " + fmt_g17(g.b) + " " + fmt_g17(g.c) +
               " " + fmt_g17(g.d) + "]\n";
    return out;
}

inline void write_group(const std::string& path, const GroupSpec& spec) {
    detail::write_or_throw(path, format_group(spec));
}

// ---- spectrum csv -----------------------------------------------------------

inline Spectrum read_spectrum(const std::string& path) {
    detail::LineReader rd(path);
    Spectrum spec;
    std::string line, key, value;
    if (!rd.next(line) || !detail::parse_kv(line, key, value) || key != "area")
        rd.fail("expected 'area = <value>' first");
    spec.area = parse_double_strict(value, "area");
    if (!rd.next(line)) rd.fail("missing header");
    if (detail::trim(line) != "lambda,mult,weight")
        rd.fail("expected header lambda,mult,weight");
    while (rd.next(line)) {
        const auto cols = detail::split(detail::trim(line), ',');
        if (cols.size() != 3) rd.fail("expected 3 columns");
        SpectrumEntry e;
        try {
            e.lambda = parse_double_strict(cols[0], "lambda");
            e.mult = parse_long_strict(cols[1], "mult");
            e.weight = parse_double_strict(cols[2], "weight");
        } catch (const std::exception& ex) {
            rd.fail(ex.what());
        }
        spec.entries.push_back(e);
    }
    spec.validate();
    return spec;
}

inline std::string format_spectrum(const Spectrum& spec) {
    std::string out = "area = " + fmt_g17(spec.area) + "\nlambda,mult,weight\n";
    for (const auto& e : spec.entries)
        out += fmt_g17(e.lambda) + "," + std::to_string(e.mult) + "," + fmt_g17(e.weight) +
               "\n";
    return out;
}

inline void write_spectrum(const std::string& path, const Spectrum& spec) {
    detail::write_or_throw(path, format_spectrum(spec));
}

// ---- orbit csv ---------------------------------------------------------------

inline OrbitSpectrum read_orbit(const std::string& path) {
    detail::LineReader rd(path);
    OrbitSpectrum orbit;
    std::string line, key, value;
    bool in_rows = false;
    while (rd.next(line)) {
        if (!in_rows) {
            const std::string t = detail::trim(line);
            if (t == "length,mult") {
                in_rows = true;
                continue;
            }
            if (!detail::parse_kv(line, key, value)) rd.fail("expected key = value");
            if (key == "label")
                orbit.label = value;
            else if (key == "z0") {
                std::istringstream ss(value);
                if (!(ss >> orbit.z0.x >> orbit.z0.y)) rd.fail("z0 needs two reals");
            } else if (key == "radius")
                orbit.radius = parse_double_strict(value, "radius");
            else if (key == "stabilizer_order")
                orbit.stabilizer_order = parse_long_strict(value, "stabilizer_order");
            else if (key == "element_count")
                orbit.element_count = parse_long_strict(value, "element_count");
            else
                rd.fail("unknown key '" + key + "'");
            continue;
        }
        const auto cols = detail::split(detail::trim(line), ',');
        if (cols.size() != 2) rd.fail("expected 2 columns");
        LengthEntry e;
        try {
            e.length = parse_double_strict(cols[0], "length");
            e.mult = parse_long_strict(cols[1], "mult");
        } catch (const std::exception& ex) {
            rd.fail(ex.what());
        }
        orbit.lengths.push_back(e);
    }
    if (!in_rows) throw std::runtime_error(path + ": missing length,mult header");
    orbit.tau0 = orbit.lengths.empty() ? inf : orbit.lengths.front().length;
    return orbit;
}

inline std::string format_orbit(const OrbitSpectrum& orbit) {
    std::string out;
    out += "label = " + orbit.label + "\n";
    out += "z0 = " + fmt_g17(orbit.z0.x) + " " + fmt_g17(orbit.z0.y) + "\n";
    out += "radius = " + fmt_g17(orbit.radius) + "\n";
    out += "stabilizer_order = " + std::to_string(orbit.stabilizer_order) + "\n";
    out += "element_count = " + std::to_string(orbit.element_count) + "\n";
    out += "length,mult\n";
    for (const auto& e : orbit.lengths)
        out += fmt_g17(e.length) + "," + std::to_string(e.mult) + "\n";
    return out;
}

inline void write_orbit(const std::string& path, const OrbitSpectrum& orbit) {
    detail::write_or_throw(path, format_orbit(orbit));
}

// ---- perturbed spectrum csv -----------------------------------------------------

inline std::string format_perturbed(const PerturbedSpectrum& pert) {
    std::string out = "lambda_max = " + fmt_g17(pert.lambda_max) + "\n";
    out += "lambda,mult,weight,type,bracket_lo,bracket_hi\n";
    for (const auto& z : pert.new_eigs)
        out += fmt_g17(z.lambda) + ",1,0," + (z.is_ground ? "ground" : "new") + "," +
               fmt_g17(z.bracket_lo) + "," + fmt_g17(z.bracket_hi) + "\n";
    for (const auto& e : pert.inherited)
        out += fmt_g17(e.lambda) + "," + std::to_string(e.mult) + "," + fmt_g17(e.weight) +
               ",inherited,,\n";
    return out;
}

inline void write_perturbed(const std::string& path, const PerturbedSpectrum& pert) {
    detail::write_or_throw(path, format_perturbed(pert));
}

inline PerturbedSpectrum read_perturbed(const std::string& path) {
    detail::LineReader rd(path);
    PerturbedSpectrum pert;
    std::string line, key, value;
    if (!rd.next(line) || !detail::parse_kv(line, key, value) || key != "lambda_max")
        rd.fail("expected 'lambda_max = <value>' first");
    pert.lambda_max = parse_double_strict(value, "lambda_max");
    if (!rd.next(line) ||
        detail::trim(line) != "lambda,mult,weight,type,bracket_lo,bracket_hi")
        rd.fail("expected perturbed header");
    while (rd.next(line)) {
        const auto cols = detail::split(detail::trim(line), ',');
        if (cols.size() != 6) rd.fail("expected 6 columns");
        const std::string& type = cols[3];
        try {
            if (type == "inherited") {
                SpectrumEntry e;
                e.lambda = parse_double_strict(cols[0], "lambda");
                e.mult = parse_long_strict(cols[1], "mult");
                e.weight = parse_double_strict(cols[2], "weight");
                pert.inherited.push_back(e);
            } else if (type == "new" || type == "ground") {
                NewEig z;
                z.lambda = parse_double_strict(cols[0], "lambda");
                z.is_ground = (type == "ground");
                z.bracket_lo = parse_double_strict(cols[4], "bracket_lo");
                z.bracket_hi = parse_double_strict(cols[5], "bracket_hi");
                pert.new_eigs.push_back(z);
                pert.ground_found = pert.ground_found || z.is_ground;
            } else {
                rd.fail("unknown type '" + type + "'");
            }
        } catch (const std::runtime_error&) {
            throw;  // already carries the location
        } catch (const std::exception& ex) {
            rd.fail(ex.what());
        }
    }
    return pert;
}

// ---- reports ----------------------------------------------------------------------

// Ordered key = value emission; every value passes through fmt_g17 so reports
// are byte-stable across runs.
struct Report {
    std::vector<std::pair<std::string, std::string>> rows;

    void add(const std::string& key, const std::string& value) {
        rows.emplace_back(key, value);
    }
    void add(const std::string& key, const char* value) { rows.emplace_back(key, value); }
    void add(const std::string& key, double value) { rows.emplace_back(key, fmt_g17(value)); }
    void add(const std::string& key, long value) {
        rows.emplace_back(key, std::to_string(value));
    }
    void add(const std::string& key, int value) {
        rows.emplace_back(key, std::to_string(value));
    }
    void add(const std::string& key, bool value) {
        rows.emplace_back(key, value ? "true" : "false");
    }

    std::string to_string() const {
        std::string out;
        for (const auto& [k, v] : rows) out += k + " = " + v + "\n";
        return out;
    }
};

}  // namespace pscatter
