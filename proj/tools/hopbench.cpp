// hopbench: generate, audit and evaluate cross-modal multi-hop benchmark data.
//
// Exit codes: 0 ok, 1 usage or config, 2 I/O, 3 generation, 4 label or audit
// failure, 5 model client failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "hopbench/evalkit.hpp"
#include "hopbench/http_client.hpp"
#include "hopbench/pipeline.hpp"
#include "hopbench/raster.hpp"

using namespace hopbench;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIO = 2, kGeneration = 3, kLabel = 4, kClient = 5 };

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw PipelineError(PipelineErrc::Config, path + ": " + e.what());
  }
}

void write_json_file(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

ClientConfig client_from_flag(const std::string& kind) { return {kind, "", "", "", ""}; }

// Rewrites dataset.jsonl and the manifest after an in-place edit.
void rewrite_dataset(const fs::path& dir, const std::vector<Instance>& instances, json manifest) {
  check_labels(instances);
  serialize_dataset(dir, instances, std::move(manifest));
}

ImageSource png_images(double dpi) {
  return [dpi](const Instance& inst) {
    const auto bmp = rasterize(render_svg(inst.chart), dpi);
    return ChartImage{std::string(bmp.png.begin(), bmp.png.end()), "image/png"};
  };
}

struct ModelFlags {
  std::string kind = "mock:oracle";
  std::string url;
  std::string model;
  std::string token_env;
  bool images = true;
  std::uint64_t seed = 0;
  int interval_ms = 0;
};

std::unique_ptr<MultimodalModelClient> make_model(const ModelFlags& f, const std::vector<Instance>& instances) {
  if (f.kind == "mock:oracle") return std::make_unique<OracleMock>(instances);
  if (f.kind == "mock:random") return std::make_unique<RandomMock>(f.seed);
  if (f.kind == "mock:always-none") return std::make_unique<AlwaysNoneMock>();
  if (f.kind == "mock:chart-withheld-reasoner") return std::make_unique<ChartWithheldReasoner>(instances, f.seed);
  if (f.kind == "http") {
    auto s = resolve_http({"http", f.url, f.model, f.token_env, ""}, "model");
    s.min_interval = std::chrono::milliseconds(f.interval_ms);
    return std::make_unique<HttpMultimodalClient>(s, f.images);
  }
  throw ClientError(ClientErrc::Config, "unknown model kind '" + f.kind + "'");
}

void print_summary(const RunSummary& s, const RunConfig& c) {
  std::cout << "instances " << s.instances << " (attempts " << s.stats.attempts << ")\n";
  for (const auto& [k, n] : s.stats.failures) std::cout << "  retried " << k << ": " << n << "\n";
  if (c.paraphrase) {
    std::cout << "paraphrase accepted " << s.deviation.accepted << "/" << s.deviation.records << "  WPD "
              << fixed(s.deviation.mean_wpd, 3) << "  LD " << fixed(s.deviation.mean_ld, 3) << "\n";
  }
  std::cout << "review items " << s.review_items << "\n";
  std::cout << "wrote " << c.output << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark generation and evaluation for cross-modal multi-hop reasoning"};
  app.require_subcommand(1);

  // synth
  SyntheticOptions synth_opt;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write seeded synthetic table, schema and text sources");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_opt.seed, "Seed");
  synth->add_option("--entities", synth_opt.entities, "Number of companies");
  synth->add_option("--columns", synth_opt.columns, "Number of table columns");
  synth->add_option("--years", synth_opt.years, "Number of fiscal years");

  // ingest
  RunConfig ingest_cfg;
  std::string ingest_out, fact_kind = "stub:extractive";
  auto* ing = app.add_subcommand("ingest", "Parse and align sources, extract entity facts");
  ing->add_option("--table", ingest_cfg.table_path, "Table CSV")->required();
  ing->add_option("--schema", ingest_cfg.schema_path, "Schema CSV")->required();
  ing->add_option("--text", ingest_cfg.text_dir, "Text root: <entity>/<item>.txt")->required();
  ing->add_option("--out", ingest_out, "Output directory")->required();
  ing->add_flag("--strict", ingest_cfg.strict_facts, "Require verbatim witnesses for facts");
  ing->add_option("--fact-client", fact_kind, "Fact extraction client kind");

  // generate
  std::string config_path, replay_path, gen_out;
  std::optional<std::uint64_t> gen_seed;
  std::optional<std::size_t> n_easy, n_medium, n_hard;
  double gen_dpi = -1;
  auto* gen = app.add_subcommand("generate", "Generate a dataset from a run config or a manifest");
  auto* cfg_opt = gen->add_option("--config", config_path, "Run config JSON");
  gen->add_option("--replay", replay_path, "Manifest of an earlier run")->excludes(cfg_opt);
  gen->add_option("--out", gen_out, "Override the output directory");
  gen->add_option("--seed", gen_seed, "Override the master seed");
  gen->add_option("--easy", n_easy, "Override the Easy count");
  gen->add_option("--medium", n_medium, "Override the Medium count");
  gen->add_option("--hard", n_hard, "Override the Hard count");
  gen->add_option("--png-dpi", gen_dpi, "Also write PNG charts at this resolution");

  // render
  std::string render_dir, render_instance;
  double render_dpi = 0;
  auto* ren = app.add_subcommand("render", "Re-render chart assets of a dataset");
  ren->add_option("--dataset", render_dir, "Dataset directory")->required();
  ren->add_option("--dpi", render_dpi, "PNG resolution; 0 writes SVG only");
  ren->add_option("--instance", render_instance, "Only this instance");

  // paraphrase
  std::string para_dir, review_file, para_kind = "stub:rules", filter_kind = "stub:polarity-guard";
  std::size_t para_conc = 1;
  auto* par = app.add_subcommand("paraphrase", "Paraphrase statements or import a human review file");
  par->add_option("--dataset", para_dir, "Dataset directory")->required();
  par->add_option("--paraphraser", para_kind, "Paraphraser client kind");
  par->add_option("--filter", filter_kind, "Filter client kind");
  par->add_option("--concurrency", para_conc, "Parallel requests");
  par->add_option("--import-review", review_file, "Completed review TSV to apply");

  // audit
  std::string audit_dir;
  bool audit_json = false;
  auto* aud = app.add_subcommand("audit", "Re-verify labels, charts, balance and paraphrase invariants");
  aud->add_option("--dataset", audit_dir, "Dataset directory")->required();
  aud->add_flag("--json", audit_json, "Print the full report as JSON");

  // evaluate
  std::string eval_dir, eval_out;
  std::vector<std::string> eval_modes{"multimodal"};
  ModelFlags mf;
  std::size_t eval_conc = 1;
  bool lenient = false, compare_withheld = false, no_images = false;
  double eval_dpi = 0;
  int eval_attempts = 3;
  auto* ev = app.add_subcommand("evaluate", "Run a model over a dataset and log every response");
  ev->add_option("--dataset", eval_dir, "Dataset directory")->required();
  ev->add_option("--out", eval_out, "Record file (JSONL)")->required();
  ev->add_option("--client", mf.kind, "mock:oracle, mock:random, mock:always-none, mock:chart-withheld-reasoner or http");
  ev->add_option("--url", mf.url, "Endpoint base URL (http client)");
  ev->add_option("--model", mf.model, "Model name (http client)");
  ev->add_option("--token-env", mf.token_env, "Variable holding the bearer token");
  ev->add_option("--seed", mf.seed, "Seed for the random mocks");
  ev->add_option("--mode", eval_modes, "Evaluation modes")->take_all();
  ev->add_option("--concurrency", eval_conc, "Parallel requests");
  ev->add_option("--interval-ms", mf.interval_ms, "Minimum spacing between requests");
  ev->add_option("--attempts", eval_attempts, "Attempts per request on transport errors");
  ev->add_option("--png-dpi", eval_dpi, "Send PNG charts at this resolution instead of SVG");
  ev->add_flag("--text-only", no_images, "Client cannot take images");
  ev->add_flag("--lenient", lenient, "Accept answers outside the strict grammar");
  ev->add_flag("--compare-withheld", compare_withheld, "Also run chart-withheld and print both");

  // report
  std::string report_dir;
  std::vector<std::string> record_files;
  bool report_json = false;
  auto* rep = app.add_subcommand("report", "Recompute metrics from record files");
  rep->add_option("--dataset", report_dir, "Dataset directory")->required();
  rep->add_option("--records", record_files, "Record files")->required();
  rep->add_flag("--json", report_json, "Print JSON instead of tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) {
      write_sources(synth_out, synthesize(synth_opt));
      std::cout << "wrote " << synth_out << "\n";
      return kOk;
    }

    if (*ing) {
      auto fc = make_text_client(client_from_flag(fact_kind), "facts");
      const auto src = load_sources(ingest_cfg);
      const auto r = ingest(src, *fc, ingest_cfg);
      const fs::path out = ingest_out;
      fs::create_directories(out);
      {
        std::ofstream t(out / "table.csv", std::ios::binary);
        write_table(t, r.bundle.tabular);
        std::ofstream s(out / "schema.csv", std::ios::binary);
        write_schema(s, r.bundle.tabular.columns);
      }
      std::string chunks, facts;
      std::size_t n_facts = 0;
      for (const auto& [id, list] : r.bundle.text) {
        for (const auto& c : list) chunks += to_json(c).dump() + "\n";
      }
      for (const auto& [id, list] : r.bundle.facts) {
        for (const auto& f : list) {
          facts += to_json(f).dump() + "\n";
          ++n_facts;
        }
      }
      write_file(out / "chunks.jsonl", chunks);
      write_file(out / "facts.jsonl", facts);
      json dropped = {{"entities", json::array()}, {"sentences", json::array()}};
      for (const auto& d : r.dropped_entities) {
        dropped["entities"].push_back({{"entity_id", d.entity_id}, {"reason", to_string(d.reason)}});
      }
      for (const auto& d : r.dropped_sentences) {
        dropped["sentences"].push_back({{"chunk_id", d.chunk_id}, {"sentence", d.sentence}, {"reason", d.reason}});
      }
      write_json_file(out / "dropped.json", dropped);
      std::cout << "entities " << r.bundle.tabular.entities.size() << "  dropped " << r.dropped_entities.size()
                << "  facts " << n_facts << "\n";
      return kOk;
    }

    if (*gen) {
      if (config_path.empty() && replay_path.empty()) {
        std::cerr << "generate: --config or --replay is required\n";
        return kUsage;
      }
      auto c = run_config_from_json(read_json_file(config_path.empty() ? replay_path : config_path));
      if (!gen_out.empty()) c.output = gen_out;
      if (gen_seed) c.seed = *gen_seed;
      if (n_easy) c.counts.easy = *n_easy;
      if (n_medium) c.counts.medium = *n_medium;
      if (n_hard) c.counts.hard = *n_hard;
      if (gen_dpi >= 0) c.png_dpi = gen_dpi;
      auto fc = make_text_client(c.fact_client, "facts");
      auto pa = make_text_client(c.paraphrase_client, "paraphraser");
      auto fi = make_text_client(c.filter_client, "filter");
      const auto sum = run_generation(c, {*fc, *pa, *fi}, [](std::size_t done, std::size_t total) {
        if (done % 100 == 0 || done == total) std::cerr << "\r" << done << "/" << total << std::flush;
      });
      std::cerr << "\n";
      if (c.png_dpi > 0) {
        for (const auto& inst : read_dataset(c.output)) {
          const auto bmp = rasterize(render_svg(inst.chart), c.png_dpi);
          auto p = fs::path(c.output) / inst.chart_path;
          write_file(p.replace_extension(".png"), std::string(bmp.png.begin(), bmp.png.end()));
        }
      }
      print_summary(sum, c);
      return kOk;
    }

    if (*ren) {
      std::size_t n = 0;
      for (const auto& inst : read_dataset(render_dir)) {
        if (!render_instance.empty() && inst.instance_id != render_instance) continue;
        auto p = fs::path(render_dir) / inst.chart_path;
        write_file(p, render_svg(inst.chart));
        if (render_dpi > 0) {
          const auto bmp = rasterize(render_svg(inst.chart), render_dpi);
          write_file(p.replace_extension(".png"), std::string(bmp.png.begin(), bmp.png.end()));
        }
        ++n;
      }
      if (!render_instance.empty() && n == 0) {
        std::cerr << "render: no instance " << render_instance << "\n";
        return kUsage;
      }
      std::cout << "rendered " << n << " charts\n";
      return kOk;
    }

    if (*par) {
      const fs::path dir = para_dir;
      auto instances = read_dataset(dir);
      auto manifest = read_manifest(dir);
      if (!review_file.empty()) {
        const auto items = parse_review(read_file(review_file));
        const auto outcomes = import_review(instances, items);
        manifest["review"]["import"] = review_summary(outcomes, items.size());
        rewrite_dataset(dir, instances, manifest);
        std::cout << manifest["review"]["import"].dump(2) << "\n";
        return kOk;
      }
      auto a = make_text_client(client_from_flag(para_kind), "paraphraser");
      auto b = make_text_client(client_from_flag(filter_kind), "filter");
      ParaphraseOptions po;
      po.concurrency = para_conc;
      const auto records = paraphrase_dataset(instances, *a, *b, po);
      std::string lines;
      for (const auto& r : records) lines += to_json(r).dump() + "\n";
      write_file(dir / "paraphrase.jsonl", lines);
      const auto dev = corpus_deviation(records);
      manifest["paraphrase"] = to_json(dev);
      manifest["clients"]["paraphraser"] = a->endpoint_id();
      manifest["clients"]["filter"] = b->endpoint_id();
      rewrite_dataset(dir, instances, manifest);
      std::cout << to_json(dev).dump(2) << "\n";
      return kOk;
    }

    if (*aud) {
      const auto r = audit_dataset(audit_dir);
      if (audit_json) {
        std::cout << to_json(r).dump(2) << "\n";
      } else {
        for (const auto& v : r.violations) {
          std::cout << v.check << "\t" << v.instance_id << "\t" << (v.statement ? std::to_string(*v.statement) : "-")
                    << "\t" << v.message << "\n";
        }
        std::cout << "instances " << r.instances << "  statements " << r.statements << "  violations "
                  << r.violations.size() << "  WPD " << fixed(r.deviation.mean_wpd, 3) << "  LD "
                  << fixed(r.deviation.mean_ld, 3) << "\n";
      }
      return r.ok() ? kOk : kLabel;
    }

    if (*ev) {
      const auto instances = read_dataset(eval_dir);
      mf.images = !no_images;
      auto client = make_model(mf, instances);
      EvalOptions opt;
      opt.concurrency = eval_conc;
      opt.lenient = lenient;
      opt.retry.attempts = eval_attempts;
      opt.rate_interval = std::chrono::milliseconds(mf.interval_ms);
      if (eval_dpi > 0) opt.images = png_images(eval_dpi);
      std::vector<EvalMode> modes;
      for (const auto& m : eval_modes) modes.push_back(parse_enum<EvalMode>(m));
      if (compare_withheld && std::find(modes.begin(), modes.end(), EvalMode::ChartWithheld) == modes.end()) {
        modes.push_back(EvalMode::ChartWithheld);
      }
      std::vector<EvalRecord> all;
      std::vector<MetricsReport> reports;
      for (auto m : modes) {
        auto recs = evaluate(instances, *client, m, opt);
        reports.push_back(compute_metrics(instances, recs));
        all.insert(all.end(), recs.begin(), recs.end());
      }
      write_file(eval_out, records_jsonl(all));
      std::cout << text_report(reports);
      if (compare_withheld && reports.size() >= 2) {
        std::cout << "\nchart-withheld minus " << reports.front().mode << ": "
                  << fixed(reports.back().average - reports.front().average) << " points\n";
      }
      return kOk;
    }

    if (*rep) {
      const auto instances = read_dataset(report_dir);
      std::vector<MetricsReport> reports;
      for (const auto& f : record_files) {
        const auto recs = records_from_jsonl(read_file(f));
        std::map<std::pair<std::string, std::string>, std::vector<EvalRecord>> groups;
        for (const auto& r : recs) groups[{r.model_id, r.mode}].push_back(r);
        for (const auto& [key, group] : groups) reports.push_back(compute_metrics(instances, group));
      }
      if (report_json) {
        json out = json::array();
        for (const auto& r : reports) out.push_back(to_json(r));
        std::cout << out.dump(2) << "\n";
      } else {
        std::cout << text_report(reports);
      }
      return kOk;
    }
  } catch (const PipelineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == PipelineErrc::Config ? kUsage : e.code() == PipelineErrc::Generation ? kGeneration : kLabel;
  } catch (const ClientError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ClientErrc::Config || e.code() == ClientErrc::SameClientConfigured ||
                   e.code() == ClientErrc::UnsupportedMode
               ? kUsage
               : kClient;
  } catch (const ComposerError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ComposerErrc::LabelMismatch ? kLabel : kGeneration;
  } catch (const AssemblerError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == AssemblerErrc::UnsatisfiableTarget ? kGeneration : kIO;
  } catch (const IngestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == IngestErrc::IOFailure ? kIO : kGeneration;
  } catch (const ParaphraseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const SamplerError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGeneration;
  } catch (const ChartError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGeneration;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIO;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIO;
  }
  return kOk;
}
