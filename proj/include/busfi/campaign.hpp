#ifndef BUSFI_CAMPAIGN_HPP
#define BUSFI_CAMPAIGN_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "busfi/fault.hpp"
#include "busfi/soc.hpp"

namespace busfi {

enum class Outcome : std::uint8_t { Crash, Success, Change, Silence };

inline constexpr Outcome kAllOutcomes[] = {Outcome::Crash, Outcome::Success, Outcome::Change, Outcome::Silence};

constexpr std::string_view outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Crash: return "CRASH";
        case Outcome::Success: return "SUCCESS";
        case Outcome::Change: return "CHANGE";
        case Outcome::Silence: return "SILENCE";
    }
    return "?";
}

inline std::optional<Outcome> parse_outcome(std::string_view s) {
    for (auto o : kAllOutcomes)
        if (outcome_name(o) == s) return o;
    return std::nullopt;
}

/// Crash wins over everything, then the authentication flag, then memory.
inline Outcome classify(const SimResult& result, const SimResult& golden) {
    if (result.termination != Termination::Halted) return Outcome::Crash;
    if (result.g_authenticated == 1) return Outcome::Success;
    if (!result.final_memory.writable_equal(golden.final_memory)) return Outcome::Change;
    return Outcome::Silence;
}

enum class EffectTag : std::uint8_t { InstructionSkip, DataReset, DataMisread, DataMultiread };

inline constexpr EffectTag kAllEffects[] = {EffectTag::InstructionSkip, EffectTag::DataReset, EffectTag::DataMisread,
                                            EffectTag::DataMultiread};

constexpr std::string_view effect_name(EffectTag t) {
    switch (t) {
        case EffectTag::InstructionSkip: return "INSTRUCTION_SKIP";
        case EffectTag::DataReset: return "DATA_RESET";
        case EffectTag::DataMisread: return "DATA_MISREAD";
        case EffectTag::DataMultiread: return "DATA_MULTIREAD";
    }
    return "?";
}

inline std::optional<EffectTag> parse_effect(std::string_view s) {
    for (auto t : kAllEffects)
        if (effect_name(t) == s) return t;
    return std::nullopt;
}

class EffectSet {
public:
    void insert(EffectTag t) { bits_ |= bit(t); }
    bool contains(EffectTag t) const { return (bits_ & bit(t)) != 0; }
    bool empty() const { return bits_ == 0; }
    std::uint8_t bits() const { return bits_; }
    void merge(EffectSet o) { bits_ |= o.bits_; }

    std::vector<EffectTag> tags() const {
        std::vector<EffectTag> out;
        for (auto t : kAllEffects)
            if (contains(t)) out.push_back(t);
        return out;
    }

    bool operator==(const EffectSet&) const = default;

private:
    static std::uint8_t bit(EffectTag t) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(t)); }
    std::uint8_t bits_ = 0;
};

struct Divergence {
    std::uint64_t cycle = 0;
    TraceKind kind = TraceKind::Fetch;
    std::size_t index = 0;

    bool operator==(const Divergence&) const = default;
};

/// Compares what the CPU observes; timing and the select word are bus-internal.
inline bool same_transaction(const TraceRecord& a, const TraceRecord& b) {
    return a.kind == b.kind && a.address == b.address && a.data == b.data && a.status == b.status;
}

/// First trace position where the transaction stream differs from golden.
inline std::optional<Divergence> first_divergence(std::span<const TraceRecord> trace,
                                                  std::span<const TraceRecord> golden) {
    const std::size_t n = std::min(trace.size(), golden.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!same_transaction(trace[i], golden[i])) return Divergence{trace[i].cycle, trace[i].kind, i};
    }
    if (trace.size() == golden.size()) return std::nullopt;
    const TraceRecord& r = trace.size() > n ? trace[n] : golden[n];
    return Divergence{r.cycle, r.kind, n};
}

namespace detail {

inline std::vector<std::uint32_t> fetch_addresses(std::span<const TraceRecord> trace) {
    std::vector<std::uint32_t> out;
    for (const auto& r : trace)
        if (r.kind == TraceKind::Fetch) out.push_back(r.address);
    return out;
}

/// The faulted stream drops some golden fetches at its first difference and
/// then follows golden again for at least `realign` fetches.
inline bool fetch_stream_skips(const std::vector<std::uint32_t>& f, const std::vector<std::uint32_t>& g,
                               std::size_t realign = 2) {
    std::size_t k = 0;
    while (k < f.size() && k < g.size() && f[k] == g[k]) ++k;
    if (k == f.size() || k == g.size()) return false;
    for (std::size_t d = 1; k + d + realign <= g.size(); ++d) {
        if (k + realign > f.size()) break;
        bool match = true;
        for (std::size_t j = 0; j < realign && match; ++j) match = f[k + j] == g[k + d + j];
        if (match) return true;
    }
    return false;
}

}  // namespace detail

inline EffectSet characterize(std::span<const TraceRecord> trace, std::span<const TraceRecord> golden, BusKind bus) {
    EffectSet tags;
    for (const auto& r : trace)
        if (popcount32(r.select) >= 2) tags.insert(EffectTag::DataMultiread);

    const std::uint32_t reset = reset_constant(bus);
    const std::size_t n = std::min(trace.size(), golden.size());
    for (std::size_t i = 0; i < n; ++i) {
        const TraceRecord& f = trace[i];
        const TraceRecord& g = golden[i];
        if (f.kind != g.kind || f.address != g.address) break;
        if (f.kind == TraceKind::Store) continue;
        const bool multi = popcount32(f.select) >= 2;
        if (!multi && f.slave() != g.slave()) tags.insert(EffectTag::DataMisread);
        if (f.data == reset && g.data != reset) tags.insert(EffectTag::DataReset);
        if (f.kind == TraceKind::Fetch && f.data != g.data && (f.latency() < g.latency() || f.data == 0))
            tags.insert(EffectTag::InstructionSkip);
    }
    if (detail::fetch_stream_skips(detail::fetch_addresses(trace), detail::fetch_addresses(golden)))
        tags.insert(EffectTag::InstructionSkip);
    return tags;
}

struct InjectionRecord {
    FaultSpec spec;
    Outcome outcome = Outcome::Silence;
    EffectSet effects;
    Termination termination = Termination::Halted;
    std::uint64_t cycles = 0;
    std::optional<Divergence> divergence;
    std::uint32_t g_authenticated = 0;

    bool operator==(const InjectionRecord&) const = default;
};

inline InjectionRecord make_record(const FaultSpec& spec, const SimResult& run, const SimResult& golden, BusKind bus) {
    InjectionRecord rec;
    rec.spec = spec;
    rec.outcome = classify(run, golden);
    rec.effects = characterize(run.trace, golden.trace, bus);
    rec.termination = run.termination;
    rec.cycles = run.cycles;
    rec.divergence = first_divergence(run.trace, golden.trace);
    rec.g_authenticated = run.g_authenticated;
    return rec;
}

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CampaignConfig {
    BusKind bus = BusKind::Wishbone;
    FaultModelKind model = FaultModelKind::BitFlip;
    std::uint64_t cycle_first = 0;
    std::optional<std::uint64_t> cycle_last;  // nullopt: last cycle of the golden run
    std::vector<std::string> registers;       // empty: all
    unsigned max_flips = kDefaultMaxFlips;
    EnumerationMode mode = EnumerationMode::Exhaustive;
    std::uint64_t seed = 0;
    std::uint64_t samples = 0;
    std::uint64_t cycle_budget_multiplier = 4;
    std::set<std::string> tmr;
    bool mux_select = false;
    std::string out;
    std::string program;  // assembly path; empty uses the built-in VerifyPin

    HardeningConfig hardening() const { return HardeningConfig{tmr, mux_select}; }
};

namespace detail {

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string s;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) s += sep;
        s += parts[i];
    }
    return s;
}

inline std::vector<std::string> split_list(std::string_view v) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        auto t = trim(cur);
        if (!t.empty()) out.emplace_back(t);
        cur.clear();
    };
    for (char c : v) {
        if (c == ',') flush();
        else cur.push_back(c);
    }
    flush();
    return out;
}

inline std::uint64_t parse_u64(const std::string& key, std::string_view v) {
    std::uint64_t out = 0;
    const std::string s(v);
    try {
        std::size_t used = 0;
        out = std::stoull(s, &used, 0);
        if (used != s.size() || s.empty() || s[0] == '-') throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
        throw ConfigError("bad value for " + key + ": '" + s + "'");
    }
    return out;
}

inline bool parse_bool(const std::string& key, std::string_view v) {
    std::string s = upper(v);
    if (s == "TRUE" || s == "1" || s == "YES" || s == "ON") return true;
    if (s == "FALSE" || s == "0" || s == "NO" || s == "OFF") return false;
    throw ConfigError("bad boolean for " + key + ": '" + std::string(v) + "'");
}

}  // namespace detail

/// Canonical `key = value` text; also the input to the config hash.
inline std::string format_config(const CampaignConfig& c) {
    std::ostringstream os;
    os << "bus = " << bus_name(c.bus) << '\n';
    os << "model = " << model_code(c.model) << '\n';
    os << "cycle_first = " << c.cycle_first << '\n';
    os << "cycle_last = " << (c.cycle_last ? std::to_string(*c.cycle_last) : std::string("end")) << '\n';
    os << "registers = " << (c.registers.empty() ? std::string("all") : detail::join(c.registers, ",")) << '\n';
    os << "max_flips = " << c.max_flips << '\n';
    os << "mode = " << (c.mode == EnumerationMode::Exhaustive ? "exhaustive" : "sampled") << '\n';
    os << "seed = " << c.seed << '\n';
    os << "samples = " << c.samples << '\n';
    os << "cycle_budget_multiplier = " << c.cycle_budget_multiplier << '\n';
    os << "tmr = " << detail::join(std::vector<std::string>(c.tmr.begin(), c.tmr.end()), ",") << '\n';
    os << "mux_select = " << (c.mux_select ? "true" : "false") << '\n';
    os << "out = " << c.out << '\n';
    if (!c.program.empty()) os << "program = " << c.program << '\n';
    return os.str();
}

inline CampaignConfig parse_config(std::string_view text) {
    CampaignConfig c;
    std::set<std::string> seen;
    std::vector<std::string> tmr_names;
    bool tmr_all = false;
    std::istringstream is{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        const auto line = detail::trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(detail::trim(line.substr(0, eq)));
        const auto val = detail::trim(line.substr(eq + 1));
        if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");
        if (key == "bus") {
            auto b = parse_bus_kind(val);
            if (!b) throw ConfigError("unknown bus '" + std::string(val) + "'");
            c.bus = *b;
        } else if (key == "model") {
            auto m = parse_model(val);
            if (!m) throw ConfigError("unknown model '" + std::string(val) + "'");
            c.model = *m;
        } else if (key == "cycle_first") {
            c.cycle_first = detail::parse_u64(key, val);
        } else if (key == "cycle_last") {
            if (detail::upper(val) == "END") c.cycle_last.reset();
            else c.cycle_last = detail::parse_u64(key, val);
        } else if (key == "registers") {
            if (detail::upper(val) == "ALL") c.registers.clear();
            else c.registers = detail::split_list(val);
        } else if (key == "max_flips") {
            const auto m = detail::parse_u64(key, val);
            if (m < 1 || m > 32) throw ConfigError("max_flips must be in 1..32");
            c.max_flips = static_cast<unsigned>(m);
        } else if (key == "mode") {
            const auto m = detail::upper(val);
            if (m == "EXHAUSTIVE") c.mode = EnumerationMode::Exhaustive;
            else if (m == "SAMPLED") c.mode = EnumerationMode::Sampled;
            else throw ConfigError("mode must be exhaustive or sampled");
        } else if (key == "seed") {
            c.seed = detail::parse_u64(key, val);
        } else if (key == "samples") {
            c.samples = detail::parse_u64(key, val);
        } else if (key == "cycle_budget_multiplier") {
            c.cycle_budget_multiplier = detail::parse_u64(key, val);
            if (c.cycle_budget_multiplier < 1) throw ConfigError("cycle_budget_multiplier must be >= 1");
        } else if (key == "tmr") {
            if (detail::upper(val) == "ALL") tmr_all = true;
            else tmr_names = detail::split_list(val);
        } else if (key == "mux_select") {
            c.mux_select = detail::parse_bool(key, val);
        } else if (key == "out") {
            c.out = std::string(val);
        } else if (key == "program") {
            c.program = std::string(val);
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    for (const char* k : {"bus", "model", "cycle_first", "cycle_last", "registers", "max_flips", "mode", "seed",
                          "samples", "cycle_budget_multiplier", "out"}) {
        if (!seen.count(k)) throw ConfigError(std::string("missing key '") + k + "'");
    }
    if (c.mode == EnumerationMode::Sampled && c.samples == 0) throw ConfigError("sampled mode needs samples > 0");
    if (c.cycle_last && *c.cycle_last < c.cycle_first) throw ConfigError("cycle_last < cycle_first");
    const auto regs = register_map(c.bus);
    auto known = [&](const std::string& n) {
        return std::any_of(regs.begin(), regs.end(), [&](const auto& d) { return d.name == n; });
    };
    for (const auto& r : c.registers)
        if (!known(r)) throw ConfigError("unknown register '" + r + "' for bus " + std::string(bus_name(c.bus)));
    if (tmr_all)
        for (const auto& d : regs) tmr_names.emplace_back(d.name);
    for (const auto& r : tmr_names) {
        if (!known(r)) throw ConfigError("unknown tmr register '" + r + "'");
        c.tmr.insert(r);
    }
    return c;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Program load_program(const std::string& path) {
    if (path.empty()) return verifypin();
    return assemble(read_text_file(path));
}

struct OutcomeCounts {
    std::map<Outcome, std::uint64_t> counts;

    std::uint64_t operator[](Outcome o) const {
        auto it = counts.find(o);
        return it == counts.end() ? 0 : it->second;
    }
    std::uint64_t total() const {
        std::uint64_t s = 0;
        for (const auto& [o, n] : counts) s += n;
        return s;
    }
};

/// Sorted target register names joined by "&".
inline std::string target_label(const FaultSpec& spec) {
    std::set<std::string> names;
    for (const auto& t : spec.targets) names.insert(t.reg);
    return detail::join(std::vector<std::string>(names.begin(), names.end()), "&");
}

inline bool data_related(TraceKind k) { return k != TraceKind::Fetch; }

struct CampaignSummary {
    std::map<std::pair<BusKind, FaultModelKind>, OutcomeCounts> outcomes;
    std::map<std::pair<BusKind, FaultModelKind>, std::map<std::string, std::uint64_t>> success_by_registers;
    std::map<std::pair<BusKind, FaultModelKind>, std::pair<std::uint64_t, std::uint64_t>> data_vs_instruction;
    std::map<std::pair<BusKind, FaultModelKind>, EffectSet> effects;  // over SUCCESS records

    std::uint64_t total() const {
        std::uint64_t s = 0;
        for (const auto& [k, c] : outcomes) s += c.total();
        return s;
    }
};

inline void accumulate(CampaignSummary& s, const InjectionRecord& r) {
    const auto key = std::pair{r.spec.bus.value_or(BusKind::Wishbone), r.spec.model};
    s.outcomes[key].counts[r.outcome] += 1;
    if (r.outcome != Outcome::Success) return;
    s.success_by_registers[key][target_label(r.spec)] += 1;
    auto& dvi = s.data_vs_instruction[key];
    if (r.divergence && data_related(r.divergence->kind)) ++dvi.first;
    else ++dvi.second;
    s.effects[key].merge(r.effects);
}

inline CampaignSummary summarize(std::span<const InjectionRecord> records) {
    CampaignSummary s;
    for (const auto& r : records) accumulate(s, r);
    return s;
}

/// Worker count from BUSFI_WORKERS, else the number of logical cores.
inline unsigned worker_count() {
    if (const char* env = std::getenv("BUSFI_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct CampaignResult {
    CampaignConfig config;
    std::uint64_t golden_cycles = 0;
    std::uint64_t space_size = 0;
    std::vector<InjectionRecord> records;
    CampaignSummary summary;
};

struct CampaignContext {
    Soc soc;
    SimResult golden;
    std::uint64_t budget;
};

inline CampaignContext prepare_campaign(const CampaignConfig& config, const Program& program) {
    Soc soc(config.bus, program, config.hardening());
    SimResult golden = soc.golden();
    if (golden.termination != Termination::Halted) throw ConfigError("golden run does not halt");
    const std::uint64_t budget = golden.cycles * config.cycle_budget_multiplier;
    return CampaignContext{std::move(soc), std::move(golden), budget};
}

inline EnumerationSpace enumeration_space(const CampaignConfig& config, std::uint64_t golden_cycles) {
    EnumerationSpace sp;
    sp.bus = config.bus;
    sp.cycle_first = config.cycle_first;
    sp.cycle_last = config.cycle_last.value_or(golden_cycles - 1);
    sp.registers = config.registers;
    sp.model = config.model;
    sp.max_flips = config.max_flips;
    sp.mode = config.mode;
    sp.seed = config.seed;
    sp.samples = config.samples;
    sp.tmr_registers = config.tmr;
    return sp;
}

inline CampaignResult run_campaign(const CampaignConfig& config, const Program& program,
                                   unsigned workers = worker_count()) {
    auto ctx = prepare_campaign(config, program);
    const auto space = enumeration_space(config, ctx.golden.cycles);
    if (space.cycle_last >= ctx.budget) throw ConfigError("cycle window extends past the cycle budget");
    FaultEnumerator faults(space, ctx.soc.registers());

    CampaignResult out;
    out.config = config;
    out.golden_cycles = ctx.golden.cycles;
    out.space_size = faults.space_size();
    out.records.resize(faults.size());

    std::atomic<std::uint64_t> next{0};
    auto work = [&] {
        for (std::uint64_t i = next++; i < faults.size(); i = next++) {
            const FaultSpec spec = faults[i];
            const SimResult run = ctx.soc.simulate(spec, ctx.budget);
            out.records[i] = make_record(spec, run, ctx.golden, config.bus);
        }
    };
    workers = static_cast<unsigned>(std::clamp<std::uint64_t>(workers, 1, std::max<std::uint64_t>(1, faults.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    out.summary = summarize(out.records);
    return out;
}

inline CampaignResult run_campaign(const CampaignConfig& config) {
    return run_campaign(config, load_program(config.program));
}

}  // namespace busfi

#endif
