#include "qoc/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "qoc/error.hpp"

namespace qoc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double to_double(std::string_view text, std::string_view key) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
    throw ParseError(fmt::format("'{}' is not a finite number", text), 0, std::string(key));
  return v;
}

template <class Int>
Int to_integer(std::string_view text, std::string_view key) {
  text = trim(text);
  Int v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError(fmt::format("'{}' is not a non-negative integer", text), 0, std::string(key));
  return v;
}

std::vector<std::string_view> split(std::string_view text, std::string_view separators) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find_first_of(separators, start);
    const auto piece = trim(text.substr(start, end == std::string_view::npos ? end : end - start));
    if (!piece.empty()) out.push_back(piece);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::vector<double> to_list(std::string_view text, std::string_view key) {
  std::vector<double> out;
  for (auto piece : split(text, ", \t")) out.push_back(to_double(piece, key));
  return out;
}

// "2:20:2" expands to 2, 4, ..., 20; anything else is an explicit list.
std::vector<double> to_sweep(std::string_view text, std::string_view key) {
  if (text.find(':') == std::string_view::npos) return to_list(text, key);
  const auto parts = split(text, ":");
  if (parts.size() != 3) throw ParseError("range must be start:stop:step", 0, std::string(key));
  const double start = to_double(parts[0], key);
  const double stop = to_double(parts[1], key);
  const double step = to_double(parts[2], key);
  if (!(step > 0.0) || stop < start)
    throw ParseError("range needs step > 0 and stop >= start", 0, std::string(key));
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(start + step * static_cast<double>(i));
  return out;
}

Range to_range(std::string_view text, std::string_view key) {
  const auto v = to_list(text, key);
  if (v.size() != 2 || v[1] < v[0])
    throw ParseError("expected 'low, high' with low <= high", 0, std::string(key));
  return {v[0], v[1]};
}

std::vector<double> to_optional_list(std::string_view text, std::string_view key) {
  if (trim(text) == "random") return {};
  return to_list(text, key);
}

std::string format_list(const std::vector<double>& v) { return fmt::format("{}", fmt::join(v, ", ")); }

std::string format_optional_list(const std::vector<double>& v) {
  return v.empty() ? "random" : format_list(v);
}

struct Field {
  std::string_view section;
  std::string_view key;
  std::function<void(ScenarioFile&, std::string_view)> set;
  std::function<std::string(const ScenarioFile&)> get;
};

#define QOC_LIST_FIELD(sec, name)                                                       \
  Field {                                                                               \
    sec, #name, [](ScenarioFile& f, std::string_view v) { f.name = to_list(v, #name); }, \
        [](const ScenarioFile& f) { return format_list(f.name); }                       \
  }
#define QOC_NUMBER_FIELD(sec, name)                                                        \
  Field {                                                                                  \
    sec, #name, [](ScenarioFile& f, std::string_view v) { f.name = to_double(v, #name); }, \
        [](const ScenarioFile& f) { return fmt::format("{}", f.name); }                    \
  }
#define QOC_INTEGER_FIELD(sec, name)                                                     \
  Field {                                                                                \
    sec, #name,                                                                          \
        [](ScenarioFile& f, std::string_view v) {                                        \
          f.name = to_integer<decltype(f.name)>(v, #name);                               \
        },                                                                               \
        [](const ScenarioFile& f) { return fmt::format("{}", f.name); }                  \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      QOC_LIST_FIELD("categories", alpha),
      QOC_LIST_FIELD("categories", beta),
      QOC_LIST_FIELD("categories", gamma),
      QOC_LIST_FIELD("categories", weights),
      QOC_LIST_FIELD("videos", a_qp),
      QOC_LIST_FIELD("videos", b_per_kbps),
      Field{"videos", "densities",
            [](ScenarioFile& f, std::string_view v) {
              f.densities.clear();
              for (auto row : split(v, ";")) f.densities.push_back(to_list(row, "densities"));
            },
            [](const ScenarioFile& f) {
              std::vector<std::string> rows;
              for (const auto& r : f.densities) rows.push_back(fmt::format("{}", fmt::join(r, " ")));
              return fmt::format("{}", fmt::join(rows, "; "));
            }},
      Field{"channel", "distances_km",
            [](ScenarioFile& f, std::string_view v) { f.distances_km = to_optional_list(v, "distances_km"); },
            [](const ScenarioFile& f) { return format_optional_list(f.distances_km); }},
      Field{"channel", "distance_range_km",
            [](ScenarioFile& f, std::string_view v) { f.distance_range_km = to_range(v, "distance_range_km"); },
            [](const ScenarioFile& f) {
              return fmt::format("{}, {}", f.distance_range_km.lo, f.distance_range_km.hi);
            }},
      Field{"channel", "speeds_kmh",
            [](ScenarioFile& f, std::string_view v) { f.speeds_kmh = to_optional_list(v, "speeds_kmh"); },
            [](const ScenarioFile& f) { return format_optional_list(f.speeds_kmh); }},
      Field{"channel", "speed_range_kmh",
            [](ScenarioFile& f, std::string_view v) { f.speed_range_kmh = to_range(v, "speed_range_kmh"); },
            [](const ScenarioFile& f) {
              return fmt::format("{}, {}", f.speed_range_kmh.lo, f.speed_range_kmh.hi);
            }},
      QOC_NUMBER_FIELD("channel", tx_power_dbm),
      QOC_NUMBER_FIELD("channel", noise_psd_dbm_hz),
      QOC_NUMBER_FIELD("channel", carrier_hz),
      QOC_NUMBER_FIELD("channel", shadowing_std_db),
      Field{"channel", "doppler_mode",
            [](ScenarioFile& f, std::string_view v) {
              try {
                f.doppler_mode = parse_doppler_mode(trim(v));
              } catch (const DomainError& e) {
                throw ParseError(e.what(), 0, "doppler_mode");
              }
            },
            [](const ScenarioFile& f) { return std::string(to_string(f.doppler_mode)); }},
      Field{"problem", "b_total_mhz",
            [](ScenarioFile& f, std::string_view v) { f.b_total_mhz = to_sweep(v, "b_total_mhz"); },
            [](const ScenarioFile& f) { return format_list(f.b_total_mhz); }},
      QOC_NUMBER_FIELD("problem", b_min_fraction),
      QOC_NUMBER_FIELD("problem", p_min),
      Field{"problem", "accuracy_constraint",
            [](ScenarioFile& f, std::string_view v) {
              try {
                f.accuracy_constraint = parse_accuracy_mode(trim(v));
              } catch (const DomainError& e) {
                throw ParseError(e.what(), 0, "accuracy_constraint");
              }
            },
            [](const ScenarioFile& f) { return std::string(to_string(f.accuracy_constraint)); }},
      QOC_NUMBER_FIELD("problem", mos_ref_kbps),
      QOC_NUMBER_FIELD("problem", mos_max_kbps),
      QOC_NUMBER_FIELD("timing", t_total_s),
      QOC_NUMBER_FIELD("timing", delta_t_ms),
      QOC_NUMBER_FIELD("timing", te_ms),
      QOC_INTEGER_FIELD("runs", trials),
      QOC_INTEGER_FIELD("runs", seed),
      QOC_INTEGER_FIELD("runs", threads),
      QOC_INTEGER_FIELD("runs", slot_trials),
      Field{"runs", "schemes",
            [](ScenarioFile& f, std::string_view v) {
              f.schemes.clear();
              for (auto s : split(v, ", \t")) {
                try {
                  f.schemes.push_back(parse_scheme(s));
                } catch (const DomainError& e) {
                  throw ParseError(e.what(), 0, "schemes");
                }
              }
            },
            [](const ScenarioFile& f) {
              std::vector<std::string_view> names;
              for (auto s : f.schemes) names.push_back(to_string(s));
              return fmt::format("{}", fmt::join(names, ", "));
            }},
  };
  return table;
}

#undef QOC_LIST_FIELD
#undef QOC_NUMBER_FIELD
#undef QOC_INTEGER_FIELD

const Field* find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

void apply(ScenarioFile& file, const Field& field, std::string_view value, std::size_t line) {
  try {
    field.set(file, value);
  } catch (const ParseError& e) {
    const std::string where = line ? fmt::format("line {}", line) : std::string("override");
    throw ParseError(fmt::format("{}: {}: {}", where, field.key, e.what()), line,
                     std::string(field.key));
  }
}

}  // namespace

ScenarioFile default_scenario_file() {
  ScenarioFile f;
  f.alpha = {-2.214e-12, -3.820e-13, -8.405e-8};
  f.beta = {6.741, 7.256, 4.158};
  f.gamma = {0.6940, 0.6958, 0.7250};
  f.weights = {1.0, 1.0, 1.0};
  f.a_qp = {46.27, 45.96, 45.22};
  f.b_per_kbps = {-7.086e-5, -8.648e-5, -1.052e-4};
  f.densities = {{11.1, 1.6, 1.5}, {1.0, 8.5, 0.3}, {0.0, 1.9, 0.0}};
  f.b_total_mhz = {2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  return f;
}

Override parse_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos)
    throw ParseError(fmt::format("override '{}' is not KEY=VALUE", text));
  return {std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1)))};
}

ScenarioFile parse_scenario(std::string_view text, std::span<const Override> overrides) {
  ScenarioFile file = default_scenario_file();
  std::string section;
  std::map<std::string, std::size_t, std::less<>> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(fmt::format("line {}: unterminated section header", line_no), line_no);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(fmt::format("line {}: expected 'key = value'", line_no), line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const Field* field = find_field(key);
    if (!field)
      throw ParseError(fmt::format("line {}: unknown key '{}'", line_no, key), line_no, std::string(key));
    if (!section.empty() && field->section != section)
      throw ParseError(fmt::format("line {}: key '{}' belongs in [{}], found in [{}]", line_no, key,
                                   field->section, section),
                       line_no, std::string(key));
    if (auto [it, inserted] = seen.emplace(std::string(key), line_no); !inserted)
      throw ParseError(fmt::format("line {}: '{}' already set on line {}", line_no, key, it->second),
                       line_no, std::string(key));
    apply(file, *field, value, line_no);
  }
  for (const auto& [raw_key, value] : overrides) {
    std::string_view key = raw_key;
    if (const auto dot = key.find('.'); dot != std::string_view::npos) key = key.substr(dot + 1);
    const Field* field = find_field(key);
    if (!field) throw ParseError(fmt::format("override: unknown key '{}'", raw_key), 0, raw_key);
    apply(file, *field, value, 0);
  }
  return file;
}

ScenarioFile load_scenario(const std::filesystem::path& path, std::span<const Override> overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot read scenario file '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), overrides);
}

std::string serialize_scenario(const ScenarioFile& file) {
  std::string out;
  std::string_view section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += fmt::format("[{}]\n", section);
    }
    out += fmt::format("{} = {}\n", f.key, f.get(file));
  }
  return out;
}

std::vector<std::string> lint_scenario(const ScenarioFile& file) {
  std::vector<std::string> warnings;
  auto fail = [](const std::string& what, std::string_view key) {
    throw ParseError(what, 0, std::string(key));
  };
  const std::size_t n = file.alpha.size();
  if (n == 0) fail("no categories configured", "alpha");
  if (file.beta.size() != n || file.gamma.size() != n || file.weights.size() != n)
    fail(fmt::format("categories disagree in length: alpha {}, beta {}, gamma {}, weights {}", n,
                     file.beta.size(), file.gamma.size(), file.weights.size()),
         "categories");
  const std::size_t m = file.a_qp.size();
  if (file.b_per_kbps.size() != m || file.densities.size() != m)
    fail(fmt::format("videos disagree in length: a_qp {}, b_per_kbps {}, densities {}", m,
                     file.b_per_kbps.size(), file.densities.size()),
         "videos");
  for (std::size_t i = 0; i < file.densities.size(); ++i)
    if (file.densities[i].size() != n)
      fail(fmt::format("density row {} has {} entries, expected {}", i + 1, file.densities[i].size(), n),
           "densities");
  if (!file.distances_km.empty() && file.distances_km.size() != m)
    fail(fmt::format("{} distances for {} vehicles", file.distances_km.size(), m), "distances_km");
  if (!file.speeds_kmh.empty() && file.speeds_kmh.size() != m)
    fail(fmt::format("{} speeds for {} vehicles", file.speeds_kmh.size(), m), "speeds_kmh");
  if (file.distance_range_km.lo <= 0.0) fail("distance range must be > 0", "distance_range_km");
  if (file.speed_range_kmh.lo < 0.0) fail("speed range must be >= 0", "speed_range_kmh");
  if (!(file.carrier_hz > 0.0)) fail("carrier must be > 0", "carrier_hz");
  if (file.shadowing_std_db < 0.0) fail("shadowing std must be >= 0", "shadowing_std_db");
  if (file.b_total_mhz.empty()) fail("no total bandwidth configured", "b_total_mhz");
  for (double b : file.b_total_mhz)
    if (!(b > 0.0)) fail("total bandwidth must be > 0", "b_total_mhz");
  if (m > 0 && !(file.b_min_fraction >= 0.0 && file.b_min_fraction <= 1.0 / static_cast<double>(m)))
    fail(fmt::format("b_min_fraction must be in [0, 1/M] = [0, {}]", 1.0 / static_cast<double>(m)),
         "b_min_fraction");
  if (!(file.mos_ref_kbps > 0.0 && file.mos_max_kbps > 0.0))
    fail("MOS rates must be > 0", "mos_ref_kbps");
  if (file.trials == 0) fail("trials must be >= 1", "trials");
  if (file.schemes.empty()) fail("no schemes selected", "schemes");

  try {
    validate(content_scenario(file));
  } catch (const DomainError& e) {
    fail(e.what(), "categories");
  }
  double min_gamma = 1.0;
  for (double g : file.gamma) min_gamma = std::min(min_gamma, g);
  if (!(file.p_min >= 0.0 && file.p_min < min_gamma))
    fail(fmt::format("p_min must be in [0, {})", min_gamma), "p_min");

  try {
    const auto slots = slot_count(episode_config(file));
    if (!slots.exact)
      warnings.push_back(fmt::format("(T - delta_t)/te is not an integer; using {} slots", slots.slots));
  } catch (const DomainError& e) {
    fail(e.what(), "timing");
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double q = max_qp_for_accuracy({file.alpha[j], file.beta[j], file.gamma[j]}, file.p_min).value();
    for (std::size_t i = 0; i < m; ++i)
      if (file.weights[j] * file.densities[i][j] > 0.0 && q < file.a_qp[i])
        warnings.push_back(fmt::format(
            "accuracy target {} binds for video {} category {} (QP must stay <= {:.4g})", file.p_min,
            i + 1, j + 1, q));
  }
  return warnings;
}

std::uint64_t config_hash(const ScenarioFile& file) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_scenario(file)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ContentScenario content_scenario(const ScenarioFile& file) {
  ContentScenario s;
  for (std::size_t n = 0; n < file.alpha.size(); ++n)
    s.categories.push_back({file.alpha[n], file.beta.at(n), file.gamma.at(n)});
  for (std::size_t m = 0; m < file.a_qp.size(); ++m)
    s.videos.push_back({file.a_qp[m], file.b_per_kbps.at(m), file.densities.at(m)});
  s.weights = file.weights;
  return s;
}

SimScenario sim_scenario(const ScenarioFile& file, double b_total_hz) {
  SimScenario s;
  s.content = content_scenario(file);
  s.channel.distances_km = file.distances_km;
  s.channel.speeds_kmh = file.speeds_kmh;
  s.channel.distance_range_km = file.distance_range_km;
  s.channel.speed_range_kmh = file.speed_range_kmh;
  s.channel.tx_power_dbm = file.tx_power_dbm;
  s.channel.noise_psd_dbm_hz = file.noise_psd_dbm_hz;
  s.channel.carrier_hz = file.carrier_hz;
  s.channel.shadowing_std_db = file.shadowing_std_db;
  s.channel.doppler = file.doppler_mode;
  s.problem.b_total_hz = b_total_hz;
  s.problem.b_min_fraction = file.b_min_fraction;
  s.problem.p_min = file.p_min;
  s.problem.accuracy_mode = file.accuracy_constraint;
  s.problem.mos = {file.mos_ref_kbps, file.mos_max_kbps};
  return s;
}

EpisodeConfig episode_config(const ScenarioFile& file, Scheme scheme) {
  EpisodeConfig c;
  c.total_duration_s = file.t_total_s;
  c.processing_delay_s = file.delta_t_ms / 1000.0;
  c.slot_s = file.te_ms / 1000.0;
  c.scheme = scheme;
  c.seed = file.seed;
  return c;
}

}  // namespace qoc
