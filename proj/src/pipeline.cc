// Copyright 2026 The curvmia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "curvmia/pipeline.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "curvmia/digest.h"
#include "curvmia/parallel.h"
#include "curvmia/random.h"

namespace curvmia {
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kKindCurvature = "curvature";
constexpr const char* kKindLoss = "loss";
constexpr const char* kKindLogit = "logit";
constexpr const char* kKindMentr = "mentr";

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Write-then-rename so a stage output is either complete or absent.
void WriteText(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

bool IsCurvatureMethod(Method m) {
  return m == Method::kCurvLr || m == Method::kCurvNll;
}

bool NeedsShadowFits(Method m) {
  return m != Method::kYeom && m != Method::kSongMentr;
}

ordered_json TransformToJson(const TransformSpec& t) {
  ordered_json j;
  j["kind"] = t.Name();
  if (t.kind == TransformKind::kGaussianJitter) j["sigma"] = t.sigma;
  j["seed"] = t.seed;
  return j;
}

TransformSpec TransformFromJson(const json& j) {
  if (j.is_string()) return ParseTransform(j.get<std::string>());
  return ParseTransform(j.at("kind").get<std::string>(), j.value("sigma", 0.0),
                        j.value("seed", uint64_t{0}));
}

// Stage cache: stages.json maps stage name -> key.
class StageCache {
 public:
  StageCache(fs::path dir, bool enabled) : path_(dir / "stages.json") {
    if (enabled && fs::exists(path_)) {
      try {
        keys_ = json::parse(ReadText(path_));
      } catch (const std::exception&) {
        keys_ = json::object();
      }
    }
    if (!keys_.is_object()) keys_ = json::object();
  }
  bool Matches(Stage stage, const std::string& key) const {
    const auto it = keys_.find(ToString(stage));
    return it != keys_.end() && *it == key;
  }
  void Record(Stage stage, const std::string& key) {
    keys_[ToString(stage)] = key;
    WriteText(path_, keys_.dump(1) + "\n");
  }
  void Invalidate(Stage stage) { keys_.erase(ToString(stage)); }

 private:
  fs::path path_;
  json keys_;
};

Dataset LoadSource(const DatasetSource& src) {
  if (src.generator) return GenGaussianMixture(*src.generator);
  if (src.csv) return LoadCsv(src.csv->path, src.csv->schema);
  throw std::invalid_argument("manifest has no dataset source");
}

template <typename Fn>
auto RunStage(Stage stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

struct TrainedModels {
  MlpParams target;
  std::string target_digest;
  uint64_t target_seed = 0;
  ShadowEnsemble shadows;
};

struct ScoreSet {
  // Row j < n_shadow: shadow j; last row: the target.
  ScoreTable curvature, loss, logit, mentr;
};

ScoreSet ScoreAll(const Dataset& ds, const TrainedModels& models,
                  const ExperimentManifest& manifest, int jobs,
                  std::vector<ScoreRecord>* records) {
  std::vector<const MlpParams*> all;
  std::vector<std::string> digests;
  for (std::size_t j = 0; j < models.shadows.models.size(); ++j) {
    all.push_back(&models.shadows.models[j]);
    digests.push_back(models.shadows.digests[j]);
  }
  all.push_back(&models.target);
  digests.push_back(models.target_digest);

  std::vector<TransformSpec> transforms = manifest.transforms;
  for (std::size_t t = 0; t < transforms.size(); ++t) {
    transforms[t].seed =
        DeriveSeed(manifest.master_seed ^ transforms[t].seed, t, kStreamJitter);
  }
  const bool want_curv = std::any_of(manifest.attacks.begin(),
                                     manifest.attacks.end(), IsCurvatureMethod);

  const std::size_t n_models = all.size();
  const std::size_t m = ds.size();
  ScoreSet s{ScoreTable(n_models, m), ScoreTable(n_models, m),
             ScoreTable(n_models, m), ScoreTable(n_models, m)};
  ParallelFor(n_models, jobs, [&](std::size_t j) {
    const MlpParams& model = *all[j];
    std::vector<double> curv, loss, logit, mentr;
    for (std::size_t i = 0; i < m; ++i) {
      curv.clear();
      loss.clear();
      logit.clear();
      mentr.clear();
      for (const TransformSpec& t : transforms) {
        const Example ex = ApplyTransform(ds.examples[i], t);
        const ForwardResult fr = ForwardLoss(model, ex);
        const double py = fr.probs[static_cast<std::size_t>(ex.y)];
        loss.push_back(fr.loss);
        logit.push_back(ScaledLogitFromProb(py));
        mentr.push_back(ModifiedEntropy(fr.probs, ex.y));
        if (want_curv) {
          curv.push_back(
              EstimateCurvature(model, ex, manifest.curvature, digests[j]));
        }
      }
      s.curvature.at(j, i) = want_curv ? AggregateAugmented(curv) : 0.0;
      s.loss.at(j, i) = AggregateAugmented(loss);
      s.logit.at(j, i) = AggregateAugmented(logit);
      s.mentr.at(j, i) = AggregateAugmented(mentr);
    }
  });

  if (records != nullptr) {
    std::ostringstream cfg;
    cfg << manifest.curvature.Canonical() << ";transforms=";
    for (const TransformSpec& t : transforms) cfg << TransformToJson(t).dump();
    const std::string config_digest = ShortDigest(cfg.str());
    for (std::size_t j = 0; j < n_models; ++j) {
      for (std::size_t i = 0; i < m; ++i) {
        const auto id = static_cast<int64_t>(i);
        if (want_curv) {
          records->push_back({id, digests[j], kKindCurvature,
                              s.curvature.at(j, i), config_digest});
        }
        records->push_back(
            {id, digests[j], kKindLoss, s.loss.at(j, i), config_digest});
        records->push_back(
            {id, digests[j], kKindLogit, s.logit.at(j, i), config_digest});
        records->push_back(
            {id, digests[j], kKindMentr, s.mentr.at(j, i), config_digest});
      }
    }
  }
  return s;
}

ScoreSet TablesFromRecords(std::span<const ScoreRecord> records,
                           const TrainedModels& models, std::size_t m,
                           bool want_curv) {
  std::vector<std::string> digests = models.shadows.digests;
  digests.push_back(models.target_digest);
  ScoreSet s;
  s.curvature = want_curv
                    ? BuildScoreTable(records, kKindCurvature, digests, m)
                    : ScoreTable(digests.size(), m);
  s.loss = BuildScoreTable(records, kKindLoss, digests, m);
  s.logit = BuildScoreTable(records, kKindLogit, digests, m);
  s.mentr = BuildScoreTable(records, kKindMentr, digests, m);
  return s;
}

// Rows 0..n-2 of a full table (the shadows).
ScoreTable ShadowRows(const ScoreTable& full) {
  ScoreTable t(full.n_models - 1, full.n_examples);
  std::copy(full.values.begin(),
            full.values.begin() + static_cast<std::ptrdiff_t>(t.values.size()),
            t.values.begin());
  return t;
}

ordered_json PairToJson(const GaussianPair& p) {
  ordered_json j;
  j["mu_in"] = p.mu_in;
  j["sigma_in"] = p.sigma_in;
  j["mu_out"] = p.mu_out;
  j["sigma_out"] = p.sigma_out;
  j["n_in"] = p.n_in;
  j["n_out"] = p.n_out;
  return j;
}

}  // namespace

StageError::StageError(Stage stage, const std::string& cause)
    : std::runtime_error("stage '" + ToString(stage) + "': " + cause),
      stage_(stage) {}

std::string ToString(Stage stage) {
  switch (stage) {
    case Stage::kData:
      return "data";
    case Stage::kTrain:
      return "train";
    case Stage::kScore:
      return "score";
    case Stage::kAttack:
      return "attack";
    case Stage::kEvaluate:
      return "evaluate";
  }
  return "unknown";
}

void ExperimentManifest::Validate() const {
  if (dataset.generator.has_value() == dataset.csv.has_value()) {
    throw std::invalid_argument(
        "manifest dataset needs exactly one of a generator or a csv path");
  }
  arch.Validate();
  hyper.Validate();
  if (n_shadow_models < 2) {
    throw std::invalid_argument("need at least 2 shadow models");
  }
  if (!(shadow_fraction > 0.0 && shadow_fraction <= 1.0)) {
    throw std::invalid_argument("shadow fraction must lie in (0, 1]");
  }
  curvature.Validate();
  if (attacks.empty()) throw std::invalid_argument("no attack methods listed");
  if (transforms.empty()) throw std::invalid_argument("no transforms listed");
  for (const TransformSpec& t : transforms) t.Validate();
  for (double f : fpr_targets) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw std::invalid_argument("FPR targets must lie in [0, 1]");
    }
  }
}

ExperimentManifest ManifestFromJson(const json& j, const fs::path& base_dir) {
  ExperimentManifest m;
  m.name = j.value("name", m.name);
  const json& d = j.at("dataset");
  if (d.contains("csv")) {
    CsvSource src;
    fs::path p = d.at("csv").get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    src.path = p.string();
    src.schema.header = d.value("header", false);
    src.schema.label_column = d.value("label_column", -1);
    if (d.contains("feature_columns")) {
      src.schema.feature_columns = d.at("feature_columns").get<std::vector<int>>();
    }
    if (d.contains("num_classes")) src.schema.num_classes = d.at("num_classes").get<int>();
    if (d.contains("num_features")) src.schema.num_features = d.at("num_features").get<int>();
    m.dataset.csv = src;
  } else {
    const std::string gen = d.value("generator", std::string("gaussian_mixture"));
    if (gen != "gaussian_mixture") {
      throw std::invalid_argument("unknown dataset generator '" + gen + "'");
    }
    MixtureSpec g;
    g.classes = d.value("classes", g.classes);
    g.dim = d.value("dim", g.dim);
    g.per_class = d.value("per_class", g.per_class);
    g.separation = d.value("separation", g.separation);
    g.noise = d.value("noise", g.noise);
    g.seed = d.value("seed", g.seed);
    m.dataset.generator = g;
  }
  m.arch.sizes = j.at("arch").get<std::vector<int>>();
  if (j.contains("train")) {
    const json& t = j.at("train");
    m.hyper.epochs = t.value("epochs", m.hyper.epochs);
    m.hyper.batch_size = t.value("batch_size", m.hyper.batch_size);
    m.hyper.lr = t.value("lr", m.hyper.lr);
    m.hyper.momentum = t.value("momentum", m.hyper.momentum);
    m.hyper.weight_decay = t.value("weight_decay", m.hyper.weight_decay);
    m.hyper.lr_decay_epochs = t.value("lr_decay_epochs", m.hyper.lr_decay_epochs);
    m.hyper.lr_decay_factor = t.value("lr_decay_factor", m.hyper.lr_decay_factor);
  }
  if (j.contains("shadow")) {
    m.n_shadow_models = j.at("shadow").value("models", m.n_shadow_models);
    m.shadow_fraction = j.at("shadow").value("fraction", m.shadow_fraction);
  }
  if (j.contains("curvature")) {
    const json& c = j.at("curvature");
    m.curvature.h = c.value("h", m.curvature.h);
    m.curvature.n_iter = c.value("n_iter", m.curvature.n_iter);
    m.curvature.seed = c.value("seed", m.curvature.seed);
    if (c.contains("probe_mode")) {
      m.curvature.probe_mode = ParseProbeMode(c.at("probe_mode").get<std::string>());
    }
    if (c.contains("variant")) {
      m.curvature.variant = ParseCurvatureVariant(c.at("variant").get<std::string>());
    }
  }
  for (const auto& a : j.at("attacks")) m.attacks.push_back(ParseMethod(a.get<std::string>()));
  if (j.contains("transforms")) {
    m.transforms.clear();
    for (const auto& t : j.at("transforms")) m.transforms.push_back(TransformFromJson(t));
  }
  if (j.contains("metrics")) {
    m.fpr_targets = j.at("metrics").value("fpr_targets", m.fpr_targets);
  }
  m.master_seed = j.value("master_seed", m.master_seed);
  m.output_dir = j.value("output_dir", std::string());
  m.Validate();
  return m;
}

ExperimentManifest LoadManifest(const fs::path& path) {
  const json j = json::parse(ReadText(path));
  return ManifestFromJson(j, path.parent_path());
}

ordered_json ManifestToJson(const ExperimentManifest& m) {
  ordered_json j;
  j["name"] = m.name;
  ordered_json d;
  if (m.dataset.generator) {
    const MixtureSpec& g = *m.dataset.generator;
    d["generator"] = "gaussian_mixture";
    d["classes"] = g.classes;
    d["dim"] = g.dim;
    d["per_class"] = g.per_class;
    d["separation"] = g.separation;
    d["noise"] = g.noise;
    d["seed"] = g.seed;
  } else if (m.dataset.csv) {
    const CsvSource& c = *m.dataset.csv;
    d["csv"] = c.path;
    d["header"] = c.schema.header;
    d["label_column"] = c.schema.label_column;
    if (!c.schema.feature_columns.empty()) d["feature_columns"] = c.schema.feature_columns;
    if (c.schema.num_classes) d["num_classes"] = *c.schema.num_classes;
    if (c.schema.num_features) d["num_features"] = *c.schema.num_features;
  }
  j["dataset"] = d;
  j["arch"] = m.arch.sizes;
  j["train"] = {{"epochs", m.hyper.epochs},
                {"batch_size", m.hyper.batch_size},
                {"lr", m.hyper.lr},
                {"momentum", m.hyper.momentum},
                {"weight_decay", m.hyper.weight_decay},
                {"lr_decay_epochs", m.hyper.lr_decay_epochs},
                {"lr_decay_factor", m.hyper.lr_decay_factor}};
  j["shadow"] = {{"models", m.n_shadow_models}, {"fraction", m.shadow_fraction}};
  j["curvature"] = {{"h", m.curvature.h},
                    {"n_iter", m.curvature.n_iter},
                    {"probe_mode", ToString(m.curvature.probe_mode)},
                    {"variant", ToString(m.curvature.variant)},
                    {"seed", m.curvature.seed}};
  ordered_json attacks = ordered_json::array();
  for (Method a : m.attacks) attacks.push_back(ToString(a));
  j["attacks"] = attacks;
  ordered_json transforms = ordered_json::array();
  for (const TransformSpec& t : m.transforms) transforms.push_back(TransformToJson(t));
  j["transforms"] = transforms;
  j["metrics"] = {{"fpr_targets", m.fpr_targets}};
  j["master_seed"] = m.master_seed;
  j["output_dir"] = m.output_dir;
  return j;
}

std::string ManifestDigest(const ExperimentManifest& manifest) {
  ordered_json j = ManifestToJson(manifest);
  j.erase("output_dir");
  return Sha256Hex(j.dump());
}

ExperimentResult RunExperiment(const ExperimentManifest& manifest,
                               const RunOptions& options) {
  ExperimentResult result;
  const fs::path out = options.out_dir.empty() ? fs::path(manifest.output_dir)
                                               : options.out_dir;
  if (out.empty()) {
    throw StageError(Stage::kData, "no output directory given");
  }
  RunStage(Stage::kData, [&] {
    manifest.Validate();
    fs::create_directories(out);
    return 0;
  });
  result.manifest_digest = ManifestDigest(manifest);
  StageCache cache(out, options.resume);

  // --- data ---
  Dataset ds;
  SubsetMask members;
  RunStage(Stage::kData, [&] {
    ds = options.dataset_override ? *options.dataset_override
                                  : LoadSource(manifest.dataset);
    ds.Validate();
    if (manifest.arch.input_dim() != ds.d || manifest.arch.num_classes() != ds.k) {
      throw std::invalid_argument(
          "architecture [" + std::to_string(manifest.arch.input_dim()) + ", ..., " +
          std::to_string(manifest.arch.num_classes()) +
          "] does not match dataset d=" + std::to_string(ds.d) +
          ", k=" + std::to_string(ds.k));
    }
    result.dataset_digest = DatasetDigest(ds);
    members = SampleSubset(ds, 0.5,
                           DeriveSeed(manifest.master_seed, 0, kStreamSplit));
    WriteText(out / "manifest.json", ManifestToJson(manifest).dump(1) + "\n");
    WriteCsv(ds, out / "dataset.csv");
    ordered_json dj;
    dj["name"] = ds.name;
    dj["digest"] = result.dataset_digest;
    dj["m"] = ds.size();
    dj["d"] = ds.d;
    dj["k"] = ds.k;
    std::vector<int64_t> member_ids;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (members.bits[i]) member_ids.push_back(static_cast<int64_t>(i));
    }
    dj["members"] = member_ids;
    WriteText(out / "data.json", dj.dump(1) + "\n");
    return 0;
  });
  if (options.stop_after == Stage::kData) return result;

  auto key_for = [&](Stage s) {
    return ShortDigest(result.manifest_digest + "|" + result.dataset_digest +
                       "|" + ToString(s));
  };

  // --- train ---
  TrainedModels models;
  RunStage(Stage::kTrain, [&] {
    const std::string key = key_for(Stage::kTrain);
    if (cache.Matches(Stage::kTrain, key)) {
      try {
        models.target = MlpFromJson(ReadText(out / "target_model.json"));
        models.target_digest = ModelDigest(models.target);
        models.target_seed = models.target.seed;
        models.shadows = LoadEnsemble(out / "shadows");
        result.stages_skipped.push_back(ToString(Stage::kTrain));
        return 0;
      } catch (const std::exception&) {
        // Fall through and retrain.
      }
    }
    cache.Invalidate(Stage::kScore);
    models.target_seed = DeriveSeed(manifest.master_seed, 0, kStreamTarget);
    models.target = TrainModel(ds, members, manifest.arch, manifest.hyper,
                               models.target_seed);
    models.target_digest = ModelDigest(models.target);
    models.shadows = TrainShadowEnsemble(
        ds, manifest.n_shadow_models, manifest.shadow_fraction, manifest.arch,
        manifest.hyper, manifest.master_seed, options.jobs);
    WriteText(out / "target_model.json", MlpToJson(models.target));
    SaveEnsemble(models.shadows, out / "shadows");
    cache.Record(Stage::kTrain, key);
    return 0;
  });
  if (options.stop_after == Stage::kTrain) return result;

  // --- score ---
  const bool want_curv = std::any_of(manifest.attacks.begin(),
                                     manifest.attacks.end(), IsCurvatureMethod);
  ScoreSet scores;
  RunStage(Stage::kScore, [&] {
    const std::string key = key_for(Stage::kScore);
    if (cache.Matches(Stage::kScore, key)) {
      try {
        const auto records = ReadScores(out / "scores.jsonl");
        scores = TablesFromRecords(records, models, ds.size(), want_curv);
        result.stages_skipped.push_back(ToString(Stage::kScore));
        return 0;
      } catch (const std::exception&) {
      }
    }
    std::vector<ScoreRecord> records;
    scores = ScoreAll(ds, models, manifest, options.jobs, &records);
    std::ostringstream os;
    for (const ScoreRecord& r : records) os << ScoreRecordToJson(r) << '\n';
    WriteText(out / "scores.jsonl", os.str());
    cache.Record(Stage::kScore, key);
    return 0;
  });
  if (options.stop_after == Stage::kScore) return result;

  // --- attack ---
  RunStage(Stage::kAttack, [&] {
    const MembershipLedger& ledger = models.shadows.ledger;
    const std::size_t target_row = scores.loss.n_models - 1;
    const std::size_t m = ds.size();
    std::vector<GaussianPair> logit_pairs;
    const bool want_lira = std::find(manifest.attacks.begin(), manifest.attacks.end(),
                                     Method::kLira) != manifest.attacks.end();
    if (want_curv) {
      result.curvature_pairs = FitGaussianPairs(ShadowRows(scores.curvature), ledger);
      ordered_json pj = ordered_json::array();
      for (const GaussianPair& p : result.curvature_pairs) pj.push_back(PairToJson(p));
      WriteText(out / "pairs.json", pj.dump(1) + "\n");
      ordered_json tj;
      tj["empirical_kl"] = KlSummaryToJson(EmpiricalKlReport(result.curvature_pairs));
      std::vector<double> sigmas;
      for (const GaussianPair& p : result.curvature_pairs) sigmas.push_back(p.PooledSigma());
      std::sort(sigmas.begin(), sigmas.end());
      tj["median_pooled_sigma"] = sigmas[sigmas.size() / 2];
      WriteText(out / "theory.json", tj.dump(1) + "\n");
    }
    if (want_lira) logit_pairs = FitGaussianPairs(ShadowRows(scores.logit), ledger);

    result.attacks.clear();
    for (Method method : manifest.attacks) {
      for (std::size_t i = 0; i < m; ++i) {
        double value = 0.0;
        if (method == Method::kCurvLr) {
          value = CurvLrScore(scores.curvature.at(target_row, i),
                              result.curvature_pairs[i]);
        } else if (method == Method::kCurvNll) {
          value = CurvNllScore(scores.curvature.at(target_row, i),
                               result.curvature_pairs[i]);
        } else if (method == Method::kSongMentr) {
          value = -scores.mentr.at(target_row, i);
        } else {
          BaselineInputs in;
          in.target_loss = scores.loss.at(target_row, i);
          in.target_logit = scores.logit.at(target_row, i);
          if (NeedsShadowFits(method)) {
            for (std::size_t j = 0; j < ledger.num_models(); ++j) {
              (ledger.In(j, i) ? in.in_losses : in.out_losses)
                  .push_back(scores.loss.at(j, i));
            }
          }
          if (method == Method::kLira) in.logit_pair = logit_pairs[i];
          value = BaselineScore(method, in);
        }
        result.attacks.push_back({static_cast<int64_t>(i), ToString(method),
                                  value, static_cast<bool>(members.bits[i])});
      }
    }
    WriteAttacks(out / "attacks.jsonl", result.attacks);
    return 0;
  });
  if (options.stop_after == Stage::kAttack) return result;

  // --- evaluate ---
  RunStage(Stage::kEvaluate, [&] {
    ordered_json report;
    report["manifest_digest"] = result.manifest_digest;
    report["dataset_digest"] = result.dataset_digest;
    ordered_json methods = ordered_json::array();
    for (Method method : manifest.attacks) {
      const std::string name = ToString(method);
      std::vector<double> pos, neg;
      for (const AttackRecord& r : result.attacks) {
        if (r.method != name) continue;
        (r.is_member_truth ? pos : neg).push_back(r.value);
      }
      const RocCurve curve = ComputeRoc(pos, neg);
      const MethodMetrics mm = Evaluate(name, curve, manifest.fpr_targets);
      WriteRocCsv(curve, out / ("roc_" + name + ".csv"));
      ordered_json mj;
      mj["method"] = mm.method;
      mj["auroc"] = mm.auroc;
      mj["bal_acc"] = mm.bal_acc;
      ordered_json tpr;
      for (double t : manifest.fpr_targets) tpr[FprKey(t)] = mm.tpr_at.at(FprKey(t));
      mj["tpr_at"] = tpr;
      methods.push_back(mj);
      result.metrics.push_back(mm);
    }
    report["methods"] = methods;
    WriteText(out / "metrics.json", report.dump(1) + "\n");
    return 0;
  });
  return result;
}

Selection ParseSelection(const std::string& name) {
  if (name == "random") return Selection::kRandom;
  if (name == "lowest_curvature") return Selection::kLowestCurvature;
  throw std::invalid_argument("unknown selection '" + name + "'");
}

std::vector<SweepRow> SweepDatasetSize(const ExperimentManifest& manifest,
                                       std::span<const int> sizes,
                                       Selection selection,
                                       const RunOptions& options) {
  const fs::path out = options.out_dir.empty() ? fs::path(manifest.output_dir)
                                               : options.out_dir;
  if (out.empty()) throw StageError(Stage::kData, "no output directory given");
  const Dataset pool = RunStage(Stage::kData, [&] {
    manifest.Validate();
    Dataset ds = options.dataset_override ? *options.dataset_override
                                          : LoadSource(manifest.dataset);
    ds.Validate();
    for (int s : sizes) {
      if (s < 2 || 2 * static_cast<std::size_t>(s) > ds.size()) {
        throw std::invalid_argument(
            "sweep size " + std::to_string(s) + " needs " +
            std::to_string(2 * s) + " examples; pool has " +
            std::to_string(ds.size()));
      }
    }
    return ds;
  });
  fs::create_directories(out);

  std::vector<double> pool_curvature;
  if (selection == Selection::kLowestCurvature) {
    pool_curvature = RunStage(Stage::kScore, [&] {
      const MlpParams ref =
          TrainModel(pool, SubsetMask::All(pool.size()), manifest.arch,
                     manifest.hyper,
                     DeriveSeed(manifest.master_seed, 0, kStreamReference));
      const std::string digest = ModelDigest(ref);
      std::vector<double> v(pool.size());
      ParallelFor(pool.size(), options.jobs, [&](std::size_t i) {
        v[i] = EstimateCurvature(ref, pool.examples[i], manifest.curvature, digest);
      });
      return v;
    });
  }

  std::vector<SweepRow> rows;
  for (int s : sizes) {
    const std::size_t count = 2 * static_cast<std::size_t>(s);
    const SubsetMask mask =
        selection == Selection::kRandom
            ? SampleCount(pool.size(), count,
                          DeriveSeed(manifest.master_seed,
                                     static_cast<uint64_t>(s), kStreamSweep))
            : SelectLowestCurvature(pool, pool_curvature, count);
    RunOptions sub = options;
    sub.out_dir = out / ("size_" + std::to_string(s));
    sub.dataset_override =
        Subset(pool, mask, pool.name + "[n=" + std::to_string(count) + "]");
    sub.stop_after = Stage::kEvaluate;
    const ExperimentResult r = RunExperiment(manifest, sub);
    for (const MethodMetrics& mm : r.metrics) {
      rows.push_back({s, mm.method, mm.auroc, mm.bal_acc});
    }
  }
  std::ostringstream csv;
  csv << "size,method,auroc,bal_acc\n";
  for (const SweepRow& r : rows) {
    csv << r.size << ',' << r.method << ',' << FormatDouble(r.auroc) << ','
        << FormatDouble(r.bal_acc) << '\n';
  }
  WriteText(out / "sweep.csv", csv.str());
  return rows;
}

std::vector<std::pair<double, double>> ReadBoundPoints(const fs::path& path,
                                                       bool header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::pair<double, double>> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && header) continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    std::string a, b, extra;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') ||
        std::getline(row, extra, ',')) {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": expected 'epsilon,value'");
    }
    try {
      std::size_t pa = 0, pb = 0;
      const double e = std::stod(a, &pa);
      const double v = std::stod(b, &pb);
      auto rest_blank = [](const std::string& s, std::size_t p) {
        return s.find_first_not_of(" \t\r", p) == std::string::npos;
      };
      if (!rest_blank(a, pa) || !rest_blank(b, pb)) throw std::invalid_argument("");
      points.emplace_back(e, v);
    } catch (const std::exception&) {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": non-numeric cell");
    }
  }
  return points;
}

ordered_json FitResultToJson(const FitResult& fit) {
  ordered_json j;
  j["s_f"] = fit.s_f;
  j["L_f"] = fit.L_f;
  j["c_f"] = fit.c_f;
  j["residual"] = fit.residual;
  j["converged"] = fit.converged;
  j["identifiable"] = fit.identifiable;
  return j;
}

FitResult FitBound(const fs::path& points_csv, const fs::path& out_json,
                   bool header) {
  const auto points = ReadBoundPoints(points_csv, header);
  const FitResult fit = FitBoundCurve(points);
  if (!out_json.empty()) {
    if (out_json.has_parent_path()) fs::create_directories(out_json.parent_path());
    ordered_json j = FitResultToJson(fit);
    j["n_points"] = points.size();
    WriteText(out_json, j.dump(1) + "\n");
  }
  return fit;
}

ordered_json TheoryReport(const BoundInputs& b) {
  b.Validate();
  ordered_json j;
  j["inputs"] = {{"epsilon", b.epsilon},       {"m", b.m},
                 {"L", b.L},                   {"sigma", b.sigma},
                 {"gamma", b.gamma},           {"delta_bias", b.delta_bias},
                 {"rho_term", b.rho_term},     {"delta_conf", b.delta_conf}};
  j["beta"] = b.Beta();
  j["c1"] = b.C1();
  j["c"] = b.C();
  j["theorem1_bound"] = Theorem1Bound(b.epsilon);
  j["theorem2_bound"] = Theorem2Bound(b);
  j["lemma_curv_upper"] = LemmaCurvUpper(b);
  if (b.epsilon > 0.0) {
    j["theorem3_crossover_m"] = Theorem3CrossoverM(b, b.C());
  } else {
    j["theorem3_crossover_m"] = nullptr;
  }
  j["confidence"] = 1.0 - b.delta_conf;
  const bool unknown = b.gamma == 0.0 && b.delta_bias == 0.0 && b.rho_term == 0.0;
  j["constants_unknown"] = unknown;
  ordered_json caveats = ordered_json::array();
  if (unknown) {
    caveats.push_back(
        "gamma, delta_bias and rho_term are zero: optimistic-constant evaluation");
  }
  caveats.push_back(
      "the curvature bound takes the lower bound of the member mean as 0; "
      "estimated curvature means can be negative");
  j["caveats"] = caveats;
  return j;
}

ordered_json KlSummaryToJson(const KlSummary& s) {
  ordered_json j;
  j["count"] = s.count;
  j["mean"] = s.mean;
  j["median"] = s.median;
  j["max"] = s.max;
  return j;
}

}  // namespace curvmia
