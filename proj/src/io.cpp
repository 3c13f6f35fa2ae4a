#include "hmminf/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "hmminf/error.hpp"

namespace hmminf {

namespace {

// Rows read from a document are renormalized when their sum is this close to 1,
// so hand-written models with rounded entries are accepted. Rows that already
// pass validation are kept bit-for-bit.
constexpr double kRenormalizeTol = 1e-6;

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

std::vector<double> parse_numbers(const std::vector<std::string_view>& tokens, std::size_t skip, std::size_t line) {
    std::vector<double> out;
    for (std::size_t t = skip; t < tokens.size(); ++t) {
        const auto v = parse_double(tokens[t]);
        if (!v) throw ParseError("expected a number, got '" + std::string(tokens[t]) + "'", line);
        out.push_back(*v);
    }
    return out;
}

void renormalize(std::vector<double>& row) {
    double sum = 0.0;
    for (double v : row) sum += v;
    const double err = std::abs(sum - 1.0);
    if (sum > 0.0 && err > 1e-12 && err <= kRenormalizeTol)
        for (double& v : row) v /= sum;
}

void write_row(std::ostream& os, std::span<const double> row) {
    for (std::size_t k = 0; k < row.size(); ++k) fmt::print(os, "{}{}", k ? " " : "", row[k]);
    fmt::print(os, "\n");
}

}  // namespace

void write_model(std::ostream& os, const HmmModel& model) {
    validate(model);
    const std::size_t m = model.num_states();
    fmt::print(os, "# hmminf model\nstates {}\n\n[initial]\n", m);
    write_row(os, model.initial);
    fmt::print(os, "\n[transition]\n");
    for (std::size_t r = 0; r < m; ++r) write_row(os, model.transition.row(r));
    fmt::print(os, "\n[emission]\n");
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, DiscreteEmission>) {
                fmt::print(os, "type discrete\nsymbols {}\n", e.symbols());
                for (std::size_t s = 0; s < m; ++s) write_row(os, e.table.row(s));
            } else if constexpr (std::is_same_v<T, GaussianHomoscedastic>) {
                fmt::print(os, "type gaussian-homoscedastic\nmeans ");
                write_row(os, e.means);
                fmt::print(os, "sigma {}\n", e.sigma);
            } else {
                fmt::print(os, "type gaussian\nmeans ");
                write_row(os, e.means);
                fmt::print(os, "sigmas ");
                write_row(os, e.sigmas);
            }
        },
        model.emission);
}

HmmModel read_model(std::istream& is) {
    enum class Section { Header, Initial, Transition, Emission };
    Section section = Section::Header;
    std::optional<std::size_t> states;
    std::vector<double> initial;
    std::vector<std::vector<double>> transition;
    std::string type;
    std::optional<std::size_t> symbols;
    std::vector<std::vector<double>> table;
    std::vector<double> means, sigmas;
    std::optional<double> sigma;

    std::string raw;
    std::size_t line = 0;
    while (std::getline(is, raw)) {
        ++line;
        std::string_view text = trim(raw);
        if (const auto hash = text.find('#'); hash != std::string_view::npos) text = trim(text.substr(0, hash));
        if (text.empty()) continue;

        if (text.front() == '[') {
            if (text == "[initial]") section = Section::Initial;
            else if (text == "[transition]") section = Section::Transition;
            else if (text == "[emission]") section = Section::Emission;
            else throw ParseError("unknown section " + std::string(text), line);
            if (!states) throw ParseError("'states' must precede the sections", line);
            continue;
        }
        const auto tokens = split_ws(text);
        switch (section) {
        case Section::Header: {
            if (tokens.size() != 2 || tokens[0] != "states") throw ParseError("expected 'states <m>'", line);
            const auto v = parse_double(tokens[1]);
            if (!v || *v < 1 || *v != std::floor(*v)) throw ParseError("invalid number of states", line);
            states = static_cast<std::size_t>(*v);
            break;
        }
        case Section::Initial:
            if (!initial.empty()) throw ParseError("[initial] takes a single row", line);
            initial = parse_numbers(tokens, 0, line);
            if (initial.size() != *states) throw ParseError("[initial] needs " + std::to_string(*states) + " entries", line);
            renormalize(initial);
            break;
        case Section::Transition:
            transition.push_back(parse_numbers(tokens, 0, line));
            if (transition.back().size() != *states)
                throw ParseError("transition row needs " + std::to_string(*states) + " entries", line);
            if (transition.size() > *states) throw ParseError("too many transition rows", line);
            renormalize(transition.back());
            break;
        case Section::Emission:
            if (tokens[0] == "type") {
                if (tokens.size() != 2) throw ParseError("expected 'type <name>'", line);
                type = std::string(tokens[1]);
            } else if (tokens[0] == "symbols") {
                const auto v = parse_numbers(tokens, 1, line);
                if (v.size() != 1 || v[0] < 1 || v[0] != std::floor(v[0])) throw ParseError("invalid symbol count", line);
                symbols = static_cast<std::size_t>(v[0]);
            } else if (tokens[0] == "means") {
                means = parse_numbers(tokens, 1, line);
            } else if (tokens[0] == "sigma") {
                const auto v = parse_numbers(tokens, 1, line);
                if (v.size() != 1) throw ParseError("expected 'sigma <value>'", line);
                sigma = v[0];
            } else if (tokens[0] == "sigmas") {
                sigmas = parse_numbers(tokens, 1, line);
            } else if (type == "discrete") {
                table.push_back(parse_numbers(tokens, 0, line));
                if (!symbols || table.back().size() != *symbols)
                    throw ParseError("emission row needs 'symbols' entries", line);
                renormalize(table.back());
            } else {
                throw ParseError("unexpected line in [emission]", line);
            }
            break;
        }
    }

    if (!states) throw ParseError("missing 'states'", 0);
    if (initial.empty()) throw ParseError("missing [initial] section", 0);
    if (transition.size() != *states) throw ParseError("transition matrix needs " + std::to_string(*states) + " rows", 0);

    EmissionModel emission;
    if (type == "discrete") {
        if (table.size() != *states) throw ParseError("emission table needs one row per state", 0);
        emission = DiscreteEmission{Matrix::from_rows(table)};
    } else if (type == "gaussian-homoscedastic") {
        if (!sigma) throw ParseError("missing 'sigma'", 0);
        emission = GaussianHomoscedastic{means, *sigma};
    } else if (type == "gaussian") {
        emission = GaussianGeneral{means, sigmas};
    } else {
        throw ParseError(type.empty() ? "missing emission type" : "unknown emission type '" + type + "'", 0);
    }
    try {
        return make_model(std::move(initial), Matrix::from_rows(transition), std::move(emission));
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("invalid model: ") + e.what(), 0);
    }
}

void write_model_file(const std::filesystem::path& path, const HmmModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    write_model(os, model);
}

HmmModel read_model_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open " + path.string(), 0);
    return read_model(is);
}

ObservationSequence read_observations(std::istream& is) {
    ObservationSequence obs;
    std::string raw;
    std::size_t line = 0;
    std::optional<std::size_t> columns;
    bool first_row = true;
    while (std::getline(is, raw)) {
        ++line;
        const std::string_view text = trim(raw);
        if (text.empty()) continue;
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = text.find(',', start);
            std::string_view f = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
            if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
            fields.push_back(f);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() > 2) throw ParseError("expected columns 'label,value' or 'value'", line);
        const auto value = parse_double(fields.back());
        if (first_row) {
            first_row = false;
            columns = fields.size();
            if (!value) continue;  // header
        }
        if (fields.size() != *columns) throw ParseError("inconsistent number of columns", line);
        if (!value || !std::isfinite(*value)) throw ParseError("invalid value '" + std::string(fields.back()) + "'", line);
        obs.values.push_back(*value);
        obs.labels.push_back(fields.size() == 2 ? std::string(fields[0]) : std::to_string(obs.values.size()));
    }
    if (obs.values.empty()) throw ParseError("no observations", line);
    return obs;
}

ObservationSequence read_observations_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open " + path.string(), 0);
    return read_observations(is);
}

void write_observations(std::ostream& os, const ObservationSequence& obs) {
    fmt::print(os, "label,value\n");
    for (std::size_t i = 0; i < obs.size(); ++i)
        fmt::print(os, "{},{}\n", i < obs.labels.size() ? obs.labels[i] : std::to_string(i + 1), obs.values[i]);
}

}  // namespace hmminf
