#ifndef BUSFI_RESULTS_IO_HPP
#define BUSFI_RESULTS_IO_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "busfi/campaign.hpp"

namespace busfi {

inline constexpr std::string_view kResultsFormat = "busfi-results";
inline constexpr int kResultsVersion = 1;

/// Load/merge failure; `line()` is 1-based, 0 when not tied to a line.
class ResultsError : public std::runtime_error {
public:
    ResultsError(std::size_t line, const std::string& msg)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Hash of everything that determines the record set; the output path is not
/// part of it.
inline std::string config_hash(const CampaignConfig& c) {
    CampaignConfig copy = c;
    copy.out.clear();
    return hex64(fnv1a64(format_config(copy)));
}

struct ResultsFile {
    CampaignConfig config;
    std::string hash;
    std::uint64_t golden_cycles = 0;
    std::uint64_t space_size = 0;
    std::vector<InjectionRecord> records;
};

namespace detail {

using nlohmann::json;

inline json config_to_json(const CampaignConfig& c) {
    json j = json::object();
    std::istringstream is(format_config(c));
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        j[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return j;
}

inline CampaignConfig config_from_json(const json& j) {
    std::string text;
    for (const auto& [k, v] : j.items()) text += k + " = " + v.get<std::string>() + "\n";
    return parse_config(text);
}

inline json record_body(const InjectionRecord& r) {
    json j;
    j["spec"] = format_spec(r.spec);
    j["outcome"] = outcome_name(r.outcome);
    json effects = json::array();
    for (auto t : r.effects.tags()) effects.push_back(effect_name(t));
    j["effects"] = effects;
    j["termination"] = termination_name(r.termination);
    j["cycles"] = r.cycles;
    if (r.divergence) {
        j["divergence"] = {{"cycle", r.divergence->cycle},
                           {"kind", trace_kind_name(r.divergence->kind)},
                           {"index", r.divergence->index}};
    } else {
        j["divergence"] = nullptr;
    }
    j["g_authenticated"] = r.g_authenticated;
    return j;
}

inline InjectionRecord record_from_json(const json& j, const RegisterFile& regs, unsigned max_flips) {
    InjectionRecord r;
    r.spec = parse_spec(j.at("spec").get<std::string>());
    validate_spec(r.spec, regs, max_flips);
    auto outcome = parse_outcome(j.at("outcome").get<std::string>());
    if (!outcome) throw std::invalid_argument("unknown outcome");
    r.outcome = *outcome;
    for (const auto& e : j.at("effects")) {
        auto t = parse_effect(e.get<std::string>());
        if (!t) throw std::invalid_argument("unknown effect tag");
        r.effects.insert(*t);
    }
    const auto term = j.at("termination").get<std::string>();
    bool found = false;
    for (auto t : {Termination::Halted, Termination::Timeout, Termination::Trapped}) {
        if (termination_name(t) == term) r.termination = t, found = true;
    }
    if (!found) throw std::invalid_argument("unknown termination");
    r.cycles = j.at("cycles").get<std::uint64_t>();
    const auto& d = j.at("divergence");
    if (!d.is_null()) {
        Divergence div;
        div.cycle = d.at("cycle").get<std::uint64_t>();
        div.index = d.at("index").get<std::size_t>();
        const auto kind = d.at("kind").get<std::string>();
        found = false;
        for (auto k : {TraceKind::Fetch, TraceKind::Load, TraceKind::Store}) {
            if (trace_kind_name(k) == kind) div.kind = k, found = true;
        }
        if (!found) throw std::invalid_argument("unknown divergence kind");
        r.divergence = div;
    }
    r.g_authenticated = j.at("g_authenticated").get<std::uint32_t>();
    return r;
}

}  // namespace detail

/// One header line, then one JSON object per record with its own checksum.
inline void write_results(std::ostream& os, const CampaignConfig& config, std::uint64_t golden_cycles,
                          std::uint64_t space_size, std::span<const InjectionRecord> records) {
    using detail::json;
    json header;
    header["format"] = kResultsFormat;
    header["version"] = kResultsVersion;
    header["config"] = detail::config_to_json(config);
    header["config_hash"] = config_hash(config);
    header["golden_cycles"] = golden_cycles;
    header["space_size"] = space_size;
    header["records"] = records.size();
    os << header.dump() << '\n';
    for (const auto& r : records) {
        json body = detail::record_body(r);
        const std::string crc = hex64(fnv1a64(body.dump()));
        body["crc"] = crc;
        os << body.dump() << '\n';
    }
}

inline void persist(const CampaignResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
    write_results(out, result.config, result.golden_cycles, result.space_size, result.records);
    out.flush();
    if (!out) throw std::ios_base::failure("write failed for '" + path + "'");
}

inline ResultsFile read_results(std::istream& is) {
    using detail::json;
    ResultsFile f;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(is, line)) throw ResultsError(0, "empty results file");
    ++line_no;
    std::uint64_t declared = 0;
    try {
        const json header = json::parse(line);
        if (header.at("format").get<std::string>() != kResultsFormat) throw ResultsError(1, "not a results file");
        if (header.at("version").get<int>() != kResultsVersion) throw ResultsError(1, "unsupported version");
        f.config = detail::config_from_json(header.at("config"));
        f.hash = header.at("config_hash").get<std::string>();
        f.golden_cycles = header.at("golden_cycles").get<std::uint64_t>();
        f.space_size = header.at("space_size").get<std::uint64_t>();
        declared = header.at("records").get<std::uint64_t>();
    } catch (const ResultsError&) {
        throw;
    } catch (const std::exception& e) {
        throw ResultsError(1, std::string("bad header: ") + e.what());
    }
    if (f.hash != config_hash(f.config)) throw ResultsError(1, "config hash does not match header config");

    const RegisterFile regs(register_map(f.config.bus), f.config.hardening());
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            const std::string crc = j.at("crc").get<std::string>();
            j.erase("crc");
            if (hex64(fnv1a64(j.dump())) != crc) throw ResultsError(line_no, "checksum mismatch");
            f.records.push_back(detail::record_from_json(j, regs, f.config.max_flips));
        } catch (const ResultsError&) {
            throw;
        } catch (const std::exception& e) {
            throw ResultsError(line_no, std::string("corrupt record: ") + e.what());
        }
    }
    if (f.records.size() != declared)
        throw ResultsError(0, "header declares " + std::to_string(declared) + " records, found " +
                                  std::to_string(f.records.size()));
    return f;
}

inline ResultsFile load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
    return read_results(in);
}

/// Stable order used for records: bus, model, cycle, then targets.
inline bool spec_key_less(const FaultSpec& a, const FaultSpec& b) {
    auto key = [](const FaultSpec& s) {
        std::vector<std::tuple<std::string, unsigned, std::uint32_t>> t;
        for (const auto& x : s.targets) t.emplace_back(x.reg, x.replica, x.mask);
        return std::tuple{s.bus.value_or(BusKind::Wishbone), s.model, s.cycle, t};
    };
    return key(a) < key(b);
}

/// Concatenates files of the same campaign config; refuses mixed hashes.
inline ResultsFile merge(const std::vector<ResultsFile>& files) {
    if (files.empty()) throw ResultsError(0, "nothing to merge");
    ResultsFile out = files.front();
    for (std::size_t i = 1; i < files.size(); ++i) {
        if (files[i].hash != out.hash)
            throw ResultsError(0, "config hash mismatch: " + out.hash + " vs " + files[i].hash);
        out.records.insert(out.records.end(), files[i].records.begin(), files[i].records.end());
    }
    std::stable_sort(out.records.begin(), out.records.end(),
                     [](const auto& a, const auto& b) { return spec_key_less(a.spec, b.spec); });
    return out;
}

}  // namespace busfi

#endif
