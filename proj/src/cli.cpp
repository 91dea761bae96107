#include "embagg/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "embagg/analysis.hpp"
#include "embagg/dataset_io.hpp"
#include "embagg/parallel.hpp"
#include "embagg/report.hpp"
#include "embagg/synthgen.hpp"

namespace embagg {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void usage(const std::string& msg) { throw Error(ErrorCode::UsageError, msg); }

std::vector<Strategy> parse_strategies(const std::string& list) {
  if (list == "all") return {std::begin(kAllStrategies), std::end(kAllStrategies)};
  std::vector<Strategy> out;
  for (const auto& key : split_list(list)) {
    const auto s = parse_strategy(key);
    if (!s) usage("unknown strategy '" + key + "'");
    out.push_back(*s);
  }
  if (out.empty()) usage("--strategies is empty");
  return out;
}

std::string strategies_key(const std::vector<Strategy>& strategies) {
  std::string out;
  for (Strategy s : kAllStrategies) {
    if (std::find(strategies.begin(), strategies.end(), s) == strategies.end()) continue;
    if (!out.empty()) out += ',';
    out += strategy_key(s);
  }
  return out;
}

NonmatchSampling parse_nonmatch(const std::string& mode, std::size_t person_count,
                                std::uint64_t seed) {
  if (mode == "auto") return NonmatchSampling::automatic(person_count, seed);
  if (mode == "full") return NonmatchSampling::full(seed);
  if (mode.rfind("sampled:", 0) == 0) {
    try {
      const auto k = std::stoull(mode.substr(8));
      if (k > 0) return NonmatchSampling::sampled(k, seed);
    } catch (const std::exception&) {
    }
  }
  usage("--nonmatch must be auto, full, or sampled:K with K >= 1");
}

ReportFormat parse_format(const std::string& name) {
  const auto f = parse_report_format(name);
  if (!f) usage("--format must be table, csv, or json");
  return *f;
}

struct OutputOptions {
  std::string format = "table";
  std::string output;
  std::optional<std::size_t> workers;
};

void add_output_options(CLI::App* cmd, OutputOptions& o) {
  cmd->add_option("--format", o.format, "table, csv, or json")->capture_default_str();
  cmd->add_option("--output", o.output, "write the report to this file instead of stdout");
  cmd->add_option("--workers", o.workers, "worker threads (capped by EMBAGG_WORKERS)");
}

struct SelectorOptions {
  std::optional<std::size_t> n_template;
  std::optional<std::size_t> n_test;
  std::string test_tags;
};

void add_selector_options(CLI::App* cmd, SelectorOptions& o) {
  auto* a = cmd->add_option("--n-template", o.n_template,
                            "first N images are template images, the rest are tests");
  auto* b = cmd->add_option("--n-test", o.n_test,
                            "last N images are tests, the rest are template images");
  auto* c = cmd->add_option("--test-tags", o.test_tags,
                            "images carrying any of these comma-separated tags are tests");
  a->excludes(b)->excludes(c);
  b->excludes(c);
}

TemplateTestSelector make_selector(const SelectorOptions& o) {
  TemplateTestSelector sel;
  if (o.n_test) {
    if (*o.n_test == 0) usage("--n-test must be >= 1");
    sel.kind = TemplateTestSelector::Kind::LastN;
    sel.count = *o.n_test;
  } else if (!o.test_tags.empty()) {
    sel.kind = TemplateTestSelector::Kind::TestTags;
    for (auto& t : split_list(o.test_tags)) sel.test_tags.insert(t);
  } else {
    sel.kind = TemplateTestSelector::Kind::FirstN;
    sel.count = o.n_template.value_or(10);
    if (sel.count == 0) usage("--n-template must be >= 1");
  }
  return sel;
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void print_provenance(const Provenance& p, std::ostream& out) {
  out << "Provenance\n"
      << "  command: " << p.command << "\n"
      << "  dataset: " << p.dataset_name << "\n"
      << "  input_hash: " << p.input_hash << "\n"
      << "  toolkit_version: " << p.toolkit_version << "\n";
  for (const auto& [k, v] : p.parameters) out << "  " << k << ": " << v << "\n";
}

void deliver(const ReportDocument& doc, const OutputOptions& o, std::ostream& out) {
  const std::string text = emit_report(doc, parse_format(o.format));
  if (o.output.empty()) {
    out << text;
    return;
  }
  write_file_atomic(o.output, text);
  print_provenance(doc.provenance, out);
  out << "report written to " << o.output << "\n";
}

Provenance provenance_for(const std::string& command, const LoadedDataset& data) {
  Provenance p;
  p.command = command;
  p.dataset_name = data.name;
  p.input_hash = "sha256:" + data.content_hash;
  return p;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Face-embedding template aggregation toolkit", "embagg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  // synth
  SynthSpec synth;
  std::string synth_out;
  std::string synth_csv;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset and save it");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--name", synth.name)->capture_default_str();
  synth_cmd->add_option("--persons", synth.n_persons)->capture_default_str();
  synth_cmd->add_option("--images", synth.images_per_person)->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim)->capture_default_str();
  synth_cmd->add_option("--center-scale", synth.center_scale)->capture_default_str();
  synth_cmd->add_option("--noise", synth.intra_noise)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--semantic-clusters", synth.semantic_clusters)->capture_default_str();
  synth_cmd->add_option("--semantic-scale", synth.semantic_scale)->capture_default_str();
  synth_cmd->add_option("--csv", synth_csv, "also write a delimited-values dump");

  // evaluate
  std::string eval_manifest;
  std::string eval_strategies = "all";
  std::size_t eval_n_template = 10;
  std::string eval_tags;
  std::size_t eval_baseline = 0;
  std::string eval_nonmatch = "auto";
  std::uint64_t eval_seed = 0;
  OutputOptions eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "match/non-match table for each strategy");
  eval_cmd->add_option("--manifest", eval_manifest)->required();
  eval_cmd->add_option("--strategies", eval_strategies,
                       "comma-separated: baseline,mean,median,min,max,p25,p75,optimal,"
                       "best-per-comp, or all")
      ->capture_default_str();
  eval_cmd->add_option("--n-template", eval_n_template)->capture_default_str();
  eval_cmd->add_option("--template-tags", eval_tags,
                       "comma-separated; only template images with one of these tags are used");
  eval_cmd->add_option("--baseline-index", eval_baseline)->capture_default_str();
  eval_cmd->add_option("--nonmatch", eval_nonmatch, "auto, full, or sampled:K")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_seed)->capture_default_str();
  add_output_options(eval_cmd, eval_out);

  // plateau
  std::string plateau_manifest;
  std::string plateau_metric = "l2";
  OutputOptions plateau_out;
  auto* plateau_cmd =
      app.add_subcommand("plateau", "distance of each next image to the running template");
  plateau_cmd->add_option("--manifest", plateau_manifest)->required();
  plateau_cmd->add_option("--metric", plateau_metric, "l2 or l1")->capture_default_str();
  add_output_options(plateau_cmd, plateau_out);

  // rolling
  std::string rolling_manifest;
  std::size_t rolling_nth = 1;
  SelectorOptions rolling_sel;
  OutputOptions rolling_out;
  auto* rolling_cmd =
      app.add_subcommand("rolling", "test distance of the running-mean template");
  rolling_cmd->add_option("--manifest", rolling_manifest)->required();
  rolling_cmd->add_option("--every-nth", rolling_nth, "use template images 0, N, 2N, ...")
      ->capture_default_str();
  add_selector_options(rolling_cmd, rolling_sel);
  add_output_options(rolling_cmd, rolling_out);

  // greedy
  std::string greedy_manifest;
  std::size_t greedy_k = 3;
  SelectorOptions greedy_sel;
  OutputOptions greedy_out;
  auto* greedy_cmd = app.add_subcommand("greedy", "greedy selection of template images");
  greedy_cmd->add_option("--manifest", greedy_manifest)->required();
  greedy_cmd->add_option("--k", greedy_k, "selection steps")->capture_default_str();
  add_selector_options(greedy_cmd, greedy_sel);
  add_output_options(greedy_cmd, greedy_out);

  // convert
  std::string conv_csv_in;
  std::string conv_out_dir;
  std::string conv_name = "imported";
  std::string conv_manifest;
  std::string conv_csv_out;
  auto* conv_cmd = app.add_subcommand(
      "convert", "delimited values <-> manifest + binary matrix");
  auto* csv_in = conv_cmd->add_option("--csv-in", conv_csv_in, "delimited dump to ingest");
  auto* out_dir = conv_cmd->add_option("--out", conv_out_dir, "dataset directory to write");
  conv_cmd->add_option("--name", conv_name, "dataset name for ingested dumps")
      ->capture_default_str();
  auto* man_in = conv_cmd->add_option("--manifest", conv_manifest, "dataset to export");
  auto* csv_out = conv_cmd->add_option("--csv-out", conv_csv_out, "delimited file to write");
  csv_in->needs(out_dir)->excludes(man_in);
  man_in->needs(csv_out);

  std::vector<const char*> argv{"embagg"};
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitUsage;
    }

    if (synth_cmd->parsed()) {
      const auto data = generate_dataset(synth, resolve_worker_count());
      const auto manifest = save_dataset(data.persons, synth_out, synth.name);
      if (!synth_csv.empty()) write_delimited(data.persons, synth_csv);
      const auto loaded = load_dataset(manifest);
      Provenance p = provenance_for("synth", loaded);
      p.parameters = {{"persons", std::to_string(synth.n_persons)},
                      {"images", std::to_string(synth.images_per_person)},
                      {"dim", std::to_string(synth.dim)},
                      {"center_scale", fmt_double(synth.center_scale)},
                      {"noise", fmt_double(synth.intra_noise)},
                      {"semantic_clusters", std::to_string(synth.semantic_clusters)},
                      {"semantic_scale", fmt_double(synth.semantic_scale)},
                      {"seed", std::to_string(synth.seed)}};
      print_provenance(p, out);
      out << "wrote " << manifest.string() << "\n";
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      const auto strategies = parse_strategies(eval_strategies);
      (void)parse_format(eval_out.format);
      SplitSpec spec;
      spec.n_template = eval_n_template;
      spec.baseline_index = eval_baseline;
      if (!eval_tags.empty()) {
        const auto tags = split_list(eval_tags);
        spec.template_tag_filter = TagSet(tags.begin(), tags.end());
      }
      try {
        spec.validate();
      } catch (const Error& e) {
        usage(e.what());
      }
      const auto data = load_dataset(eval_manifest);
      const auto sampling = parse_nonmatch(eval_nonmatch, data.persons.size(), eval_seed);
      auto report = evaluate_strategies(data.persons, strategies, spec, sampling,
                                        resolve_worker_count(eval_out.workers), data.name);
      for (const auto& s : report.skipped) {
        err << "warning: skipped person '" << s.person_id << "' (" << s.reason << ")\n";
      }
      Provenance p = provenance_for("evaluate", data);
      p.parameters = {{"strategies", strategies_key(strategies)},
                      {"n_template", std::to_string(spec.n_template)},
                      {"template_tags", eval_tags.empty() ? "-" : eval_tags},
                      {"baseline_index", std::to_string(spec.baseline_index)},
                      {"nonmatch", sampling.describe()},
                      {"seed", std::to_string(eval_seed)}};
      report.per_person.clear();
      deliver({p, std::move(report)}, eval_out, out);
      return kExitOk;
    }

    if (plateau_cmd->parsed()) {
      (void)parse_format(plateau_out.format);
      CurveMetric metric = CurveMetric::L2;
      if (plateau_metric == "l1") {
        metric = CurveMetric::L1;
      } else if (plateau_metric != "l2") {
        usage("--metric must be l2 or l1");
      }
      const auto data = load_dataset(plateau_manifest);
      auto exp = run_plateau(data.persons, metric, resolve_worker_count(plateau_out.workers));
      Provenance p = provenance_for("plateau", data);
      p.parameters = {{"metric", plateau_metric}};
      deliver({p, to_report("plateau", std::move(exp))}, plateau_out, out);
      return kExitOk;
    }

    if (rolling_cmd->parsed()) {
      (void)parse_format(rolling_out.format);
      if (rolling_nth == 0) usage("--every-nth must be >= 1");
      const auto selector = make_selector(rolling_sel);
      const auto data = load_dataset(rolling_manifest);
      auto exp = run_rolling(data.persons, selector, rolling_nth,
                             resolve_worker_count(rolling_out.workers));
      Provenance p = provenance_for("rolling", data);
      p.parameters = {{"split", selector.describe()},
                      {"every_nth", std::to_string(rolling_nth)}};
      deliver({p, to_report("rolling", std::move(exp))}, rolling_out, out);
      return kExitOk;
    }

    if (greedy_cmd->parsed()) {
      (void)parse_format(greedy_out.format);
      if (greedy_k == 0) usage("--k must be >= 1");
      const auto selector = make_selector(greedy_sel);
      const auto data = load_dataset(greedy_manifest);
      auto exp = run_greedy(data.persons, selector, greedy_k,
                            resolve_worker_count(greedy_out.workers));
      Provenance p = provenance_for("greedy", data);
      p.parameters = {{"split", selector.describe()}, {"k", std::to_string(greedy_k)}};
      deliver({p, to_report(std::move(exp))}, greedy_out, out);
      return kExitOk;
    }

    if (conv_cmd->parsed()) {
      if (!conv_csv_in.empty()) {
        const auto dataset = read_delimited(conv_csv_in);
        const auto manifest = save_dataset(dataset, conv_out_dir, conv_name);
        const auto loaded = load_dataset(manifest);
        Provenance p = provenance_for("convert", loaded);
        p.parameters = {{"source", conv_csv_in}};
        print_provenance(p, out);
        out << "wrote " << manifest.string() << "\n";
        return kExitOk;
      }
      if (!conv_manifest.empty()) {
        const auto data = load_dataset(conv_manifest);
        write_delimited(data.persons, conv_csv_out);
        print_provenance(provenance_for("convert", data), out);
        out << "wrote " << conv_csv_out << "\n";
        return kExitOk;
      }
      usage("convert needs --csv-in/--out or --manifest/--csv-out");
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::UsageError) return kExitUsage;
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace embagg
