#include "embagg/report.hpp"

#include <fmt/format.h>

#include <charconv>

#include "json.hpp"

namespace embagg {

using json = nlohmann::ordered_json;

std::optional<ReportFormat> parse_report_format(std::string_view name) {
  if (name == "table" || name == "table-text") return ReportFormat::Table;
  if (name == "csv" || name == "delimited") return ReportFormat::Delimited;
  if (name == "json") return ReportFormat::Json;
  return std::nullopt;
}

std::string format_distance(double d) { return fmt::format("{:.3f}", d); }

std::string format_factor(std::optional<double> f) {
  if (!f) return "n/a";
  return fmt::format("{:.1f}x", *f);
}

std::string format_cell(double distance, std::optional<double> factor) {
  return format_distance(distance) + " (" + format_factor(factor) + ")";
}

namespace {

std::string full_precision(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string join_tags(const std::optional<TagSet>& tags) {
  if (!tags) return "-";
  std::string out;
  for (const auto& t : *tags) {
    if (!out.empty()) out += ',';
    out += t;
  }
  return out;
}

// ---- JSON ------------------------------------------------------------------

json optional_number(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional_number(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json to_json(const Provenance& p) {
  json params = json::object();
  for (const auto& [k, v] : p.parameters) params[k] = v;
  return json{{"command", p.command},
              {"dataset_name", p.dataset_name},
              {"input_hash", p.input_hash},
              {"toolkit_version", p.toolkit_version},
              {"parameters", params}};
}

Provenance provenance_from_json(const json& j) {
  Provenance p;
  p.command = j.at("command").get<std::string>();
  p.dataset_name = j.at("dataset_name").get<std::string>();
  p.input_hash = j.at("input_hash").get<std::string>();
  p.toolkit_version = j.at("toolkit_version").get<std::string>();
  for (const auto& [k, v] : j.at("parameters").items()) {
    p.parameters.emplace_back(k, v.get<std::string>());
  }
  return p;
}

json skipped_json(const std::vector<SkippedPerson>& skipped) {
  json out = json::array();
  for (const auto& s : skipped) out.push_back({{"person_id", s.person_id}, {"reason", s.reason}});
  return out;
}

std::vector<SkippedPerson> skipped_from_json(const json& j) {
  std::vector<SkippedPerson> out;
  for (const auto& s : j) {
    out.push_back({s.at("person_id").get<std::string>(), s.at("reason").get<std::string>()});
  }
  return out;
}

json to_json(const EvaluationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"strategy", std::string(strategy_key(row.strategy))},
                    {"oracle", row.oracle},
                    {"match_distance", row.match_distance},
                    {"match_factor", optional_number(row.match_factor)},
                    {"nonmatch_distance", row.nonmatch_distance},
                    {"nonmatch_factor", optional_number(row.nonmatch_factor)},
                    {"match_pairs", row.match_pairs},
                    {"nonmatch_pairs", row.nonmatch_pairs}});
  }
  json split{{"n_template", r.split.n_template}, {"baseline_index", r.split.baseline_index}};
  split["template_tag_filter"] =
      r.split.template_tag_filter
          ? json(std::vector<std::string>(r.split.template_tag_filter->begin(),
                                          r.split.template_tag_filter->end()))
          : json(nullptr);
  return json{{"type", "evaluation"},
              {"dataset_name", r.dataset_name},
              {"dim", r.dim},
              {"person_count", r.person_count},
              {"skipped", skipped_json(r.skipped)},
              {"split", split},
              {"nonmatch_sampling",
               {{"mode", r.sampling.mode == NonmatchSampling::Mode::Full ? "full" : "sampled"},
                {"probes_per_person", r.sampling.probes_per_person},
                {"seed", r.sampling.seed}}},
              {"aggregation", "pooled over all (person, probe) pairs"},
              {"rows", rows}};
}

EvaluationReport evaluation_from_json(const json& j) {
  EvaluationReport r;
  r.dataset_name = j.at("dataset_name").get<std::string>();
  r.dim = j.at("dim").get<std::size_t>();
  r.person_count = j.at("person_count").get<std::size_t>();
  r.skipped = skipped_from_json(j.at("skipped"));
  const json& split = j.at("split");
  r.split.n_template = split.at("n_template").get<std::size_t>();
  r.split.baseline_index = split.at("baseline_index").get<std::size_t>();
  if (!split.at("template_tag_filter").is_null()) {
    const auto tags = split.at("template_tag_filter").get<std::vector<std::string>>();
    r.split.template_tag_filter = TagSet(tags.begin(), tags.end());
  }
  const json& s = j.at("nonmatch_sampling");
  r.sampling.mode = s.at("mode").get<std::string>() == "full" ? NonmatchSampling::Mode::Full
                                                               : NonmatchSampling::Mode::Sampled;
  r.sampling.probes_per_person = s.at("probes_per_person").get<std::size_t>();
  r.sampling.seed = s.at("seed").get<std::uint64_t>();
  for (const auto& row : j.at("rows")) {
    StrategyRow out;
    const auto key = row.at("strategy").get<std::string>();
    const auto strategy = parse_strategy(key);
    if (!strategy) throw Error(ErrorCode::ManifestParseError, "unknown strategy " + key);
    out.strategy = *strategy;
    out.oracle = row.at("oracle").get<bool>();
    out.match_distance = row.at("match_distance").get<double>();
    out.match_factor = read_optional_number(row.at("match_factor"));
    out.nonmatch_distance = row.at("nonmatch_distance").get<double>();
    out.nonmatch_factor = read_optional_number(row.at("nonmatch_factor"));
    out.match_pairs = row.at("match_pairs").get<std::size_t>();
    out.nonmatch_pairs = row.at("nonmatch_pairs").get<std::size_t>();
    r.rows.push_back(out);
  }
  return r;
}

json curve_json(const CurveSeries& c) {
  json pts = json::array();
  for (const auto& p : c.points) pts.push_back(json::array({p.index, p.value}));
  return json{{"label", c.label}, {"points", pts}};
}

CurveSeries curve_from_json(const json& j) {
  CurveSeries c{j.at("label").get<std::string>(), {}};
  for (const auto& p : j.at("points")) {
    c.points.push_back({p.at(0).get<std::size_t>(), p.at(1).get<double>()});
  }
  return c;
}

json to_json(const CurveReport& r) {
  json persons = json::array();
  for (const auto& c : r.per_person) persons.push_back(curve_json(c));
  return json{{"type", "curve"},
              {"kind", r.kind},
              {"averaging", "per person, then across persons"},
              {"average", curve_json(r.average)},
              {"average_counts", r.average_counts},
              {"per_person", persons},
              {"skipped", skipped_json(r.skipped)}};
}

CurveReport curve_report_from_json(const json& j) {
  CurveReport r;
  r.kind = j.at("kind").get<std::string>();
  r.average = curve_from_json(j.at("average"));
  r.average_counts = j.at("average_counts").get<std::vector<std::size_t>>();
  for (const auto& c : j.at("per_person")) r.per_person.push_back(curve_from_json(c));
  r.skipped = skipped_from_json(j.at("skipped"));
  return r;
}

json to_json(const GreedyReport& r) {
  json persons = json::array();
  for (const auto& pt : r.per_person) {
    persons.push_back({{"person_id", pt.person_id},
                       {"selected", pt.trace.selected},
                       {"selected_indices", pt.trace.selected_indices},
                       {"distances", pt.trace.distances},
                       {"truncated", pt.trace.truncated},
                       {"all_images_distance", pt.all_images_distance}});
  }
  return json{{"type", "greedy"},
              {"averaging", "per person, then across persons"},
              {"average_per_step", r.average_per_step},
              {"persons_per_step", r.persons_per_step},
              {"average_all_images", r.average_all_images},
              {"per_person", persons},
              {"skipped", skipped_json(r.skipped)}};
}

GreedyReport greedy_report_from_json(const json& j) {
  GreedyReport r;
  r.average_per_step = j.at("average_per_step").get<std::vector<double>>();
  r.persons_per_step = j.at("persons_per_step").get<std::vector<std::size_t>>();
  r.average_all_images = j.at("average_all_images").get<double>();
  for (const auto& pj : j.at("per_person")) {
    PersonTrace pt;
    pt.person_id = pj.at("person_id").get<std::string>();
    pt.trace.selected = pj.at("selected").get<std::vector<std::string>>();
    pt.trace.selected_indices = pj.at("selected_indices").get<std::vector<std::size_t>>();
    pt.trace.distances = pj.at("distances").get<std::vector<double>>();
    pt.trace.truncated = pj.at("truncated").get<bool>();
    pt.all_images_distance = pj.at("all_images_distance").get<double>();
    r.per_person.push_back(std::move(pt));
  }
  r.skipped = skipped_from_json(j.at("skipped"));
  return r;
}

// ---- text ------------------------------------------------------------------

std::string provenance_lines(const Provenance& p, std::string_view prefix) {
  std::string out;
  auto line = [&](std::string_view k, std::string_view v) {
    out += fmt::format("{}{}: {}\n", prefix, k, v);
  };
  line("command", p.command);
  line("dataset", p.dataset_name);
  line("input_hash", p.input_hash);
  line("toolkit_version", p.toolkit_version);
  for (const auto& [k, v] : p.parameters) line(k, v);
  return out;
}

std::string evaluation_table(const EvaluationReport& r) {
  std::string out = fmt::format(
      "Dataset {}: dim {}, {} persons evaluated, {} skipped\n"
      "Split: first {} images as template candidates, template tags {}, baseline index {}\n"
      "Non-match probes: {} (seed {})\n\n",
      r.dataset_name, r.dim, r.person_count, r.skipped.size(), r.split.n_template,
      join_tags(r.split.template_tag_filter), r.split.baseline_index, r.sampling.describe(),
      r.sampling.seed);
  constexpr int kNameWidth = 26;
  constexpr int kKindWidth = 10;
  const std::string rule = std::string(kNameWidth, '-') + "+" + std::string(kKindWidth + 2, '-') +
                           "+" + std::string(16, '-') + "\n";
  out += fmt::format("{:<{}}| {:<{}} | {}\n", "", kNameWidth, "", kKindWidth, r.dataset_name);
  bool any_oracle = false;
  for (const auto& row : r.rows) {
    out += rule;
    std::string name(strategy_label(row.strategy));
    if (row.oracle) {
      name += " *";
      any_oracle = true;
    }
    out += fmt::format("{:<{}}| {:<{}} | {}\n", name, kNameWidth, "Match", kKindWidth,
                       format_cell(row.match_distance, row.match_factor));
    out += fmt::format("{:<{}}| {:<{}} | {}\n", "", kNameWidth, "Non-Match", kKindWidth,
                       format_cell(row.nonmatch_distance, row.nonmatch_factor));
  }
  out += "\nValues are average L2 distances; the bracket is baseline distance / strategy "
         "distance.\n";
  if (any_oracle) {
    out += "* oracle row: built from test images, not available in production.\n";
  }
  return out;
}

std::string evaluation_delimited(const EvaluationReport& r) {
  std::string out =
      "strategy,oracle,match_distance,match_factor,nonmatch_distance,nonmatch_factor,"
      "match_pairs,nonmatch_pairs\n";
  auto factor = [](std::optional<double> f) { return f ? full_precision(*f) : std::string(); };
  for (const auto& row : r.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", strategy_key(row.strategy),
                       row.oracle ? 1 : 0, full_precision(row.match_distance),
                       factor(row.match_factor), full_precision(row.nonmatch_distance),
                       factor(row.nonmatch_factor), row.match_pairs, row.nonmatch_pairs);
  }
  return out;
}

std::string curve_table(const CurveReport& r) {
  std::string out = fmt::format("{} curve, {} persons ({} skipped), averaged per index\n\n",
                                r.kind, r.per_person.size(), r.skipped.size());
  out += fmt::format("{:>7} | {:>9} | {:>7}\n", "index", "distance", "persons");
  out += "--------+-----------+--------\n";
  for (std::size_t i = 0; i < r.average.points.size(); ++i) {
    out += fmt::format("{:>7} | {:>9} | {:>7}\n", r.average.points[i].index,
                       format_distance(r.average.points[i].value),
                       i < r.average_counts.size() ? r.average_counts[i] : 0);
  }
  return out;
}

// Plateau output carries an extra `delta` column (value minus previous
// value); positive deltas are the upticks.
std::string curve_delimited(const CurveReport& r) {
  const bool with_delta = r.kind == "plateau";
  std::string out = with_delta ? "person_id,index,value,delta\n" : "person_id,index,value\n";
  auto emit = [&](const CurveSeries& c, std::string_view label) {
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      const auto& p = c.points[i];
      out += fmt::format("{},{},{}", label, p.index, full_precision(p.value));
      if (with_delta) {
        out += ',';
        if (i > 0) out += full_precision(p.value - c.points[i - 1].value);
      }
      out += '\n';
    }
  };
  for (const auto& c : r.per_person) emit(c, c.label);
  emit(r.average, "__mean__");
  return out;
}

std::string greedy_table(const GreedyReport& r) {
  std::string out = fmt::format("Greedy template selection, {} persons ({} skipped)\n\n",
                                r.per_person.size(), r.skipped.size());
  std::string head = fmt::format("{:<22}", "After n-th best images");
  std::string vals = fmt::format("{:<22}", "Avg. distance");
  for (std::size_t s = 0; s < r.average_per_step.size(); ++s) {
    head += fmt::format(" | {:>6}", s + 1);
    vals += fmt::format(" | {:>6}", format_distance(r.average_per_step[s]));
  }
  out += head + "\n" + vals + "\n\n";
  out += fmt::format("All template images: {}\n", format_distance(r.average_all_images));
  std::size_t truncated = 0;
  for (const auto& pt : r.per_person) truncated += pt.trace.truncated ? 1 : 0;
  if (truncated > 0) {
    out += fmt::format("{} persons stopped early (no remaining image improved the distance)\n",
                       truncated);
  }
  return out;
}

std::string greedy_delimited(const GreedyReport& r) {
  std::string out = "person_id,step,image_id,distance\n";
  for (const auto& pt : r.per_person) {
    for (std::size_t s = 0; s < pt.trace.distances.size(); ++s) {
      out += fmt::format("{},{},{},{}\n", pt.person_id, s + 1, pt.trace.selected[s],
                         full_precision(pt.trace.distances[s]));
    }
    out += fmt::format("{},all,,{}\n", pt.person_id, full_precision(pt.all_images_distance));
  }
  for (std::size_t s = 0; s < r.average_per_step.size(); ++s) {
    out += fmt::format("__mean__,{},,{}\n", s + 1, full_precision(r.average_per_step[s]));
  }
  out += fmt::format("__mean__,all,,{}\n", full_precision(r.average_all_images));
  return out;
}

}  // namespace

std::string emit_report(const ReportDocument& doc, ReportFormat format) {
  if (format == ReportFormat::Json) {
    json payload = std::visit([](const auto& p) { return to_json(p); }, doc.payload);
    json root{{"provenance", to_json(doc.provenance)}, {"payload", payload}};
    return root.dump(2) + "\n";
  }
  if (format == ReportFormat::Delimited) {
    std::string out = provenance_lines(doc.provenance, "# ");
    out += std::visit(
        [](const auto& p) -> std::string {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, EvaluationReport>) return evaluation_delimited(p);
          if constexpr (std::is_same_v<T, CurveReport>) return curve_delimited(p);
          if constexpr (std::is_same_v<T, GreedyReport>) return greedy_delimited(p);
        },
        doc.payload);
    return out;
  }
  std::string out = "Provenance\n" + provenance_lines(doc.provenance, "  ") + "\n";
  out += std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, EvaluationReport>) return evaluation_table(p);
        if constexpr (std::is_same_v<T, CurveReport>) return curve_table(p);
        if constexpr (std::is_same_v<T, GreedyReport>) return greedy_table(p);
      },
      doc.payload);
  return out;
}

ReportDocument parse_report_json(std::string_view text) {
  try {
    const json root = json::parse(text);
    ReportDocument doc;
    doc.provenance = provenance_from_json(root.at("provenance"));
    const json& payload = root.at("payload");
    const auto type = payload.at("type").get<std::string>();
    if (type == "evaluation") {
      doc.payload = evaluation_from_json(payload);
    } else if (type == "curve") {
      doc.payload = curve_report_from_json(payload);
    } else if (type == "greedy") {
      doc.payload = greedy_report_from_json(payload);
    } else {
      throw Error(ErrorCode::ManifestParseError, "unknown report type " + type);
    }
    return doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestParseError, e.what());
  }
}

CurveReport to_report(std::string kind, CurveExperiment experiment) {
  CurveReport r;
  r.kind = std::move(kind);
  r.per_person = std::move(experiment.per_person);
  r.average = std::move(experiment.average.curve);
  r.average_counts = std::move(experiment.average.counts);
  r.skipped = std::move(experiment.skipped);
  return r;
}

GreedyReport to_report(GreedyExperiment experiment) {
  GreedyReport r;
  r.per_person = std::move(experiment.per_person);
  r.average_per_step = std::move(experiment.average_per_step);
  r.persons_per_step = std::move(experiment.persons_per_step);
  r.average_all_images = experiment.average_all_images;
  r.skipped = std::move(experiment.skipped);
  return r;
}

}  // namespace embagg
