#ifndef BUSFI_REPORT_HPP
#define BUSFI_REPORT_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "busfi/campaign.hpp"

namespace busfi {

enum class TableKind : std::uint8_t { OutcomeCounts, SuccessRegisterDistribution, DataVsInstruction, EffectMatrix };

inline constexpr TableKind kAllTables[] = {TableKind::OutcomeCounts, TableKind::SuccessRegisterDistribution,
                                           TableKind::DataVsInstruction, TableKind::EffectMatrix};

constexpr std::string_view table_name(TableKind k) {
    switch (k) {
        case TableKind::OutcomeCounts: return "outcome_counts";
        case TableKind::SuccessRegisterDistribution: return "success_register_distribution";
        case TableKind::DataVsInstruction: return "data_vs_instruction";
        case TableKind::EffectMatrix: return "effect_matrix";
    }
    return "?";
}

inline std::optional<TableKind> parse_table_kind(std::string_view s) {
    const std::string lower = [&] {
        std::string out(s);
        for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return out;
    }();
    for (auto k : kAllTables)
        if (table_name(k) == lower) return k;
    return std::nullopt;
}

struct Table {
    std::string title;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// `num / den` as a percentage with two decimals, rounded half-up.
inline std::string percent(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return "0.00";
    const std::uint64_t hundredths = (num * 20000 + den) / (2 * den);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%llu.%02llu", static_cast<unsigned long long>(hundredths / 100),
                  static_cast<unsigned long long>(hundredths % 100));
    return buf;
}

inline Table aggregate(std::span<const InjectionRecord> records, TableKind kind) {
    const CampaignSummary s = summarize(records);
    Table t;
    t.title = std::string(table_name(kind));
    auto group = [](const std::pair<BusKind, FaultModelKind>& k) {
        return std::vector<std::string>{std::string(bus_name(k.first)), std::string(model_code(k.second))};
    };
    switch (kind) {
        case TableKind::OutcomeCounts:
            t.header = {"bus", "model", "CRASH", "SUCCESS", "CHANGE", "SILENCE", "TOTAL"};
            for (const auto& [k, c] : s.outcomes) {
                auto row = group(k);
                for (auto o : kAllOutcomes) row.push_back(std::to_string(c[o]));
                row.push_back(std::to_string(c.total()));
                t.rows.push_back(std::move(row));
            }
            break;
        case TableKind::SuccessRegisterDistribution:
            t.header = {"bus", "model", "registers", "successes", "percent"};
            for (const auto& [k, combos] : s.success_by_registers) {
                std::uint64_t total = 0;
                for (const auto& [label, n] : combos) total += n;
                for (const auto& [label, n] : combos) {
                    auto row = group(k);
                    row.push_back(label);
                    row.push_back(std::to_string(n));
                    row.push_back(percent(n, total));
                    t.rows.push_back(std::move(row));
                }
            }
            break;
        case TableKind::DataVsInstruction:
            t.header = {"bus", "model", "successes", "data_percent", "instruction_percent"};
            for (const auto& [k, split] : s.data_vs_instruction) {
                const auto total = split.first + split.second;
                auto row = group(k);
                row.push_back(std::to_string(total));
                row.push_back(percent(split.first, total));
                row.push_back(percent(split.second, total));
                t.rows.push_back(std::move(row));
            }
            break;
        case TableKind::EffectMatrix: {
            t.header = {"bus", "model"};
            for (auto e : kAllEffects) t.header.emplace_back(effect_name(e));
            t.header.emplace_back("OTHER");
            // Every (bus, model) present gets a row, even without successes.
            std::map<std::pair<BusKind, FaultModelKind>, bool> other;
            for (const auto& [k, c] : s.outcomes) other[k] = false;
            for (const auto& r : records) {
                if (r.outcome == Outcome::Success && r.effects.empty())
                    other[{r.spec.bus.value_or(BusKind::Wishbone), r.spec.model}] = true;
            }
            for (const auto& [k, has_other] : other) {
                auto row = group(k);
                const auto it = s.effects.find(k);
                const EffectSet seen = it == s.effects.end() ? EffectSet{} : it->second;
                for (auto e : kAllEffects) row.emplace_back(seen.contains(e) ? "yes" : "no");
                row.emplace_back(has_other ? "yes" : "no");
                t.rows.push_back(std::move(row));
            }
            break;
        }
    }
    return t;
}

enum class RenderFormat : std::uint8_t { Text, Csv };

namespace detail {

inline std::string csv_field(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

inline std::string render(const Table& t, RenderFormat format) {
    std::ostringstream os;
    if (format == RenderFormat::Csv) {
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << detail::csv_field(cells[i]);
            os << '\n';
        };
        line(t.header);
        for (const auto& r : t.rows) line(r);
        return os.str();
    }
    std::vector<std::size_t> width(t.header.size(), 0);
    for (std::size_t i = 0; i < t.header.size(); ++i) width[i] = t.header[i].size();
    for (const auto& r : t.rows)
        for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
    auto line = [&](const std::vector<std::string>& cells) {
        std::string s;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) s += "  ";
            s += cells[i];
            if (i + 1 < cells.size()) s.append(width[i] - cells[i].size(), ' ');
        }
        os << s << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return os.str();
}

}  // namespace busfi

#endif
