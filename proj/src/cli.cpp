#include "alignmarket/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "alignmarket/core.hpp"
#include "alignmarket/dialogue.hpp"
#include "alignmarket/hull.hpp"
#include "alignmarket/market.hpp"
#include "alignmarket/optim.hpp"
#include "alignmarket/persuasion.hpp"

namespace alignmarket {

namespace {

using nlohmann::json;

// Flag values that parse but make no sense; reported like usage errors.
struct UsageFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string join_ints(const std::vector<int>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

// Tabular output: CSV by default, an array of objects under --format json.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }

  std::string to_csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ',';
      out += columns[c];
    }
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        out += row[c];
      }
      out += '\n';
    }
    return out;
  }

  std::string to_json_text() const {
    json arr = json::array();
    for (const auto& row : rows) {
      json obj;
      for (std::size_t c = 0; c < columns.size(); ++c) {
        // Numbers stay numbers in JSON output when they round-trip cleanly.
        try {
          std::size_t used = 0;
          const double v = std::stod(row[c], &used);
          if (used == row[c].size()) {
            obj[columns[c]] = v;
            continue;
          }
        } catch (const std::exception&) {
        }
        obj[columns[c]] = row[c];
      }
      arr.push_back(obj);
    }
    return arr.dump(2) + "\n";
  }
};

// Collects files for one run and lands them atomically, metadata last.
class RunOutput {
 public:
  RunOutput(std::string dir, std::string format, std::string command,
            std::uint64_t seed)
      : dir_(std::move(dir)), format_(std::move(format)),
        command_(std::move(command)), seed_(seed) {}

  bool enabled() const { return !dir_.empty(); }

  void param(const std::string& key, const json& value) {
    params_[key] = value;
  }

  // Primary tables honor --format; figure files are always CSV.
  void table(const std::string& base, const Table& t, bool figure = false) {
    if (!enabled()) return;
    if (!figure && format_ == "json")
      files_.emplace_back(base + ".json", t.to_json_text());
    else
      files_.emplace_back(base + ".csv", t.to_csv());
  }

  void text(const std::string& name, std::string content) {
    if (!enabled()) return;
    files_.emplace_back(name, std::move(content));
  }

  void flush() {
    if (!enabled()) return;
    for (const auto& [name, content] : files_) atomic_write(name, content);
    json meta;
    meta["command"] = command_;
    meta["version"] = kVersion;
    meta["seed"] = seed_;
    meta["parameters"] = params_;
    json outs = json::array();
    for (const auto& [name, content] : files_) outs.push_back(name);
    meta["outputs"] = outs;
    atomic_write("metadata.json", meta.dump(2) + "\n");
  }

 private:
  void atomic_write(const std::string& name, const std::string& content) {
    namespace fs = std::filesystem;
    fs::create_directories(dir_);
    const fs::path target = fs::path(dir_) / name;
    const fs::path tmp = target.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw SchemaError("cannot write " + tmp.string());
      out << content;
    }
    fs::rename(tmp, target);
  }

  std::string dir_, format_, command_;
  std::uint64_t seed_ = 0;
  json params_ = json::object();
  std::vector<std::pair<std::string, std::string>> files_;
};

// ---------- shared flag handling ----------

struct CommonOpts {
  std::string instance = "synthetic1";
  std::string prior;  // empty = keep the instance's own prior
  std::string receiver = "best-response";
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "csv";
};

ReceiverMode mode_of(const CommonOpts& o) {
  return o.receiver == "obedient" ? ReceiverMode::kObedient
                                  : ReceiverMode::kPosteriorBestResponse;
}

std::vector<double> read_number_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    while (!tok.empty() && tok.back() == ',') tok.pop_back();
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw SchemaError(path + ": expected numbers, got \"" + tok + "\"");
    }
  }
  return out;
}

PersuasionInstance load_instance_opt(const CommonOpts& o) {
  PersuasionInstance inst;
  const auto names = fixture_names();
  if (std::find(names.begin(), names.end(), o.instance) != names.end())
    inst = fixture(o.instance);
  else
    inst = load_instance(o.instance);
  if (!o.prior.empty()) {
    if (o.prior == "uniform")
      inst = with_prior(std::move(inst), uniform_prior(inst.num_states()));
    else
      inst = with_prior(std::move(inst), read_number_file(o.prior));
  }
  return inst;
}

DiscreteJointPrior load_joint_prior_opt(const std::string& name_or_path) {
  const auto names = joint_prior_fixture_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end())
    return joint_prior_fixture(name_or_path);
  return load_joint_prior(name_or_path);
}

std::vector<int> parse_committee(const std::string& spec, std::size_t nb) {
  std::vector<int> members;
  if (spec == "all") {
    for (std::size_t i = 0; i < nb; ++i) members.push_back(static_cast<int>(i));
    return members;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      members.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageFailure("--committee expects 'all', 'subsets', or a "
                         "comma-separated index list; got \"" +
                         spec + "\"");
    }
  }
  if (members.empty())
    throw UsageFailure("--committee must name at least one member");
  return members;
}

std::vector<int> parse_int_list(const std::string& spec, const char* flag) {
  std::vector<int> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageFailure(std::string(flag) + " expects a comma-separated " +
                         "integer list; got \"" + spec + "\"");
    }
  }
  if (out.empty())
    throw UsageFailure(std::string(flag) + " must not be empty");
  return out;
}

std::string bound_stdout(const std::string& committee_id, const BoundReport& b) {
  std::string s;
  s += "committee " + committee_id + "\n";
  s += "first_best " + fmt(b.first_best) + "\n";
  s += "epsilon " + fmt(b.epsilon) + "\n";
  s += "bound " + fmt(b.bound) + "\n";
  s += "min_ne_utility " + fmt(b.min_alice_utility) + "\n";
  s += "brd_utility " + fmt(b.brd_utility) + "\n";
  s += std::string("satisfied ") + (b.satisfied ? "true" : "false") + "\n";
  s += "slack " + fmt(b.slack) + "\n";
  return s;
}

std::vector<std::string> bound_row(const std::string& committee_id,
                                   std::size_t k, const BoundReport& b) {
  return {committee_id,          std::to_string(k),   fmt(b.epsilon),
          fmt(b.min_alice_utility), fmt(b.brd_utility), fmt(b.bound),
          fmt(b.first_best)};
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"strategic-alignment market toolbox"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonOpts common;
  // Per-command knobs.
  std::string committee = "all";
  int bob_index = 0;
  std::string sender = "alice";
  std::string schemes = "lp";
  std::string bobs = "all";
  int num_paths = 20;
  std::string scores_path;
  std::string method = "nnls";
  std::string k_spec = "auto";
  int permutations = 20, folds = 5;
  int items = 30, agents = 10;
  std::string noise_kind = "uniform";
  double noise_param = 0.1;
  int actions = 3, states = 3;
  double eps = 0.1, delta = 0.05;
  int trials = 1000;
  std::string prior_name = "corr2";
  int xa = 0, xb = 0, rounds = 10;
  double zeta = 0.05, lambda = 1.0, delta_conv = 0.1, deficit_eps = 0.0;
  double conv_rounds = 9000;
  std::string fixture_name;
  bool sampled = false;
  int samples = 1000;

  auto add_common = [&](CLI::App* cmd, bool with_instance = true) {
    if (with_instance) {
      cmd->add_option("--instance", common.instance,
                      "fixture name or instance JSON path");
      cmd->add_option("--prior", common.prior,
                      "'uniform' or a file of state probabilities");
      cmd->add_option("--receiver", common.receiver, "receiver behavior")
          ->check(CLI::IsMember({"obedient", "best-response"}));
    }
    cmd->add_option("--seed", common.seed, "random seed");
    cmd->add_option("--out", common.out_dir, "output directory");
    cmd->add_option("--format", common.format, "table format")
        ->check(CLI::IsMember({"csv", "json"}));
  };

  std::vector<std::pair<CLI::App*, std::function<void()>>> handlers;

  // ---------- game ----------
  auto* game = app.add_subcommand("game", "selection-game analysis");
  game->require_subcommand(1);

  auto* g_enum = game->add_subcommand("enumerate", "list stable schemes");
  add_common(g_enum);
  g_enum->add_option("--committee", committee, "'all' or index list");
  handlers.emplace_back(g_enum, [&] {
    const PersuasionInstance inst = load_instance_opt(common);
    Committee c{inst, parse_committee(committee, inst.num_bobs())};
    const auto rep = enumerate_symmetric_equilibria(c, mode_of(common));
    const std::string cid = join_ints(c.members, '+');
    out << "committee " << cid << "\n";
    out << "stable_count " << rep.stable.size() << "\n";
    out << "min_ne_utility " << fmt(rep.min_alice_utility) << "\n";
    Table t;
    t.columns = {"committee_id", "action_map", "alice_value"};
    for (int m : c.members) t.columns.push_back("u_" + std::to_string(m));
    for (const auto& s : rep.stable) {
      std::vector<std::string> row{cid, join_ints(s.action_map, '|'),
                                   fmt(s.alice_value)};
      for (double v : s.member_values) row.push_back(fmt(v));
      t.add(std::move(row));
    }
    for (const auto& s : rep.stable)
      out << "stable " << join_ints(s.action_map, '|') << " alice "
          << fmt(s.alice_value) << "\n";
    RunOutput ro(common.out_dir, common.format, "game enumerate", common.seed);
    ro.param("instance", common.instance);
    ro.param("committee", cid);
    ro.param("receiver", common.receiver);
    ro.table("stable", t);
    ro.flush();
  });

  auto* g_brd = game->add_subcommand("brd", "best-response dynamics");
  add_common(g_brd);
  g_brd->add_option("--committee", committee, "'all' or index list");
  long long max_rounds = -1;
  g_brd->add_option("--max-rounds", max_rounds, "round cap (-1 = default)");
  handlers.emplace_back(g_brd, [&] {
    const PersuasionInstance inst = load_instance_opt(common);
    Committee c{inst, parse_committee(committee, inst.num_bobs())};
    const auto traj = best_response_dynamics(c, mode_of(common), max_rounds);
    const std::string cid = join_ints(c.members, '+');
    out << "committee " << cid << "\n";
    out << "converged " << (traj.converged ? "true" : "false") << "\n";
    out << "rounds " << traj.rounds << "\n";
    out << "final_map " << join_ints(traj.final_map, '|') << "\n";
    out << "final_selected " << traj.final_selected << "\n";
    out << "final_alice_utility " << fmt(traj.final_alice_utility) << "\n";
    Table t;
    t.columns = {"round",    "deviator",      "action_map",
                 "selected", "alice_utility", "deviator_value"};
    for (const auto& s : traj.steps)
      t.add({std::to_string(s.round), std::to_string(s.deviator),
             join_ints(s.scheme_map, '|'), std::to_string(s.selected),
             fmt(s.alice_utility), fmt(s.deviator_value)});
    RunOutput ro(common.out_dir, common.format, "game brd", common.seed);
    ro.param("instance", common.instance);
    ro.param("committee", cid);
    ro.param("receiver", common.receiver);
    ro.param("max_rounds", max_rounds);
    ro.table("brd", t);
    ro.flush();
  });

  auto* g_mis = game->add_subcommand("misalign", "misalignment score");
  add_common(g_mis);
  g_mis->add_option("--committee", committee, "'all' or index list");
  handlers.emplace_back(g_mis, [&] {
    const PersuasionInstance inst = load_instance_opt(common);
    Committee c{inst, parse_committee(committee, inst.num_bobs())};
    const auto rep = enumerate_symmetric_equilibria(c, mode_of(common));
    const auto score = misalignment_epsilon(c, rep, mode_of(common));
    const std::string cid = join_ints(c.members, '+');
    out << "committee " << cid << "\n";
    out << "epsilon " << fmt(score.epsilon) << "\n";
    out << "offset " << fmt(score.offset) << "\n";
    for (std::size_t j = 0; j < c.members.size(); ++j)
      out << "w_" << c.members[j] << " " << fmt(score.weights[j]) << "\n";
    Table t;
    t.columns = {"committee_id", "epsilon", "offset"};
    for (int m : c.members) t.columns.push_back("w_" + std::to_string(m));
    std::vector<std::string> row{cid, fmt(score.epsilon), fmt(score.offset)};
    for (double w : score.weights) row.push_back(fmt(w));
    t.add(std::move(row));
    RunOutput ro(common.out_dir, common.format, "game misalign", common.seed);
    ro.param("instance", common.instance);
    ro.param("committee", cid);
    ro.param("receiver", common.receiver);
    ro.table("misalign", t);
    ro.flush();
  });

  auto* g_bound = game->add_subcommand("bound", "worst-equilibrium guarantee");
  add_common(g_bound);
  g_bound->add_option("--committee", committee,
                      "'all', 'subsets', or index list");
  handlers.emplace_back(g_bound, [&] {
    const PersuasionInstance inst = load_instance_opt(common);
    const ReceiverMode mode = mode_of(common);
    RunOutput ro(common.out_dir, common.format, "game bound", common.seed);
    ro.param("instance", common.instance);
    ro.param("committee", committee);
    ro.param("receiver", common.receiver);
    Table full;
    full.columns = {"committee_id",   "k",           "epsilon",
                    "min_ne_utility", "brd_utility", "bound",
                    "first_best"};
    if (committee == "subsets") {
      const std::size_t nb = inst.num_bobs();
      Table fig3, fig4;
      fig3.columns = {"epsilon", "min_ne_utility", "bound", "k"};
      fig4.columns = {"epsilon", "brd_utility", "min_ne_utility"};
      bool all_ok = true;
      double min_slack = kInf;
      for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << nb); ++mask) {
        Committee c;
        c.instance = inst;
        for (std::size_t i = 0; i < nb; ++i)
          if (mask >> i & 1) c.members.push_back(static_cast<int>(i));
        const BoundReport b = check_theorem_bound(c, mode);
        const std::string cid = join_ints(c.members, '+');
        full.add(bound_row(cid, c.members.size(), b));
        fig3.add({fmt(b.epsilon), fmt(b.min_alice_utility), fmt(b.bound),
                  std::to_string(c.members.size())});
        fig4.add({fmt(b.epsilon), fmt(b.brd_utility),
                  fmt(b.min_alice_utility)});
        all_ok = all_ok && b.satisfied;
        min_slack = std::min(min_slack, b.slack);
      }
      out << "committees " << full.rows.size() << "\n";
      out << "all_satisfied " << (all_ok ? "true" : "false") << "\n";
      out << "min_slack " << fmt(min_slack) << "\n";
      ro.table("bound", full);
      ro.table("fig3", fig3, /*figure=*/true);
      ro.table("fig4", fig4, /*figure=*/true);
    } else {
      Committee c{inst, parse_committee(committee, inst.num_bobs())};
      const BoundReport b = check_theorem_bound(c, mode);
      const std::string cid = join_ints(c.members, '+');
      out << bound_stdout(cid, b);
      full.add(bound_row(cid, c.members.size(), b));
      ro.table("bound", full);
    }
    ro.flush();
  });

  auto* g_paths = game->add_subcommand("paths", "random committee growth");
  add_common(g_paths);
  g_paths->add_option("--paths", num_paths, "number of insertion orders");
  handlers.emplace_back(g_paths, [&] {
    const PersuasionInstance inst = load_instance_opt(common);
    const auto records =
        committee_paths(inst, num_paths, common.seed, mode_of(common));
    const double fb = first_best(inst);
    Table t, fig5;
    t.columns = {"committee_id",   "path_id",     "k",
                 "added_member",   "epsilon",     "min_ne_utility",
                 "brd_utility",    "bound",       "first_best"};
    fig5.columns = {"path_id", "k", "min_ne_utility"};
    for (const auto& r : records) {
      std::vector<int> sorted = r.members;
      std::sort(sorted.begin(), sorted.end());
      t.add({join_ints(sorted, '+'), std::to_string(r.path_id),
             std::to_string(r.k), std::to_string(r.added_member),
             fmt(r.epsilon), fmt(r.min_alice_utility), fmt(r.brd_utility),
             fmt(r.bound), fmt(fb)});
      fig5.add({std::to_string(r.path_id), std::to_string(r.k),
                fmt(r.min_alice_utility)});
    }
    out << "paths " << num_paths << "\n";
    out << "records " << records.size() << "\n";
    RunOutput ro(common.out_dir, common.format, "game paths", common.seed);
    ro.param("instance", common.instance);
    ro.param("paths", num_paths);
    ro.param("receiver", common.receiver);
    ro.table("paths", t);
    ro.table("fig5", fig5, /*figure=*/true);
    ro.flush();
  });

  // ---------- persuade ----------
  auto* persuade = app.add_subcommand("persuade", "single-sender analysis");
  persuade->require_subcommand(1);

  auto* p_opt = persuade->add_subcommand("optimal", "obedient-scheme program");
  add_common(p_opt);
  p_opt->add_option("--sender", sender, "'alice' or a 0-based advisor index");
  handlers.emplace_back(p_opt, [&] {
    const PersuasionInstance inst = load_instance_opt(common);
    const Matrix* u = nullptr;
    if (sender == "alice") {
      u = &inst.alice_utility;
    } else {
      int idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoi(sender, &used);
        if (used != sender.size()) throw std::invalid_argument(sender);
      } catch (const std::exception&) {
        throw UsageFailure("--sender expects 'alice' or an advisor index");
      }
      if (idx < 0 || static_cast<std::size_t>(idx) >= inst.num_bobs())
        throw DomainError("advisor index out of range");
      u = &inst.bob_utilities[static_cast<std::size_t>(idx)];
    }
    const auto res = optimal_persuasion_lp(inst, *u);
    if (res.status != LpStatus::kOptimal)
      throw NumericalFailure("persuasion program did not solve");
    out << "sender_value " << fmt(res.sender_value) << "\n";
    out << "alice_value " << fmt(res.alice_value) << "\n";
    for (std::size_t y = 0; y < inst.num_states(); ++y) {
      out << "pi " << inst.states[y];
      for (std::size_t a = 0; a < res.scheme.message_count(); ++a)
        out << " " << fmt(res.scheme.rows(y, a));
      out << "\n";
    }
    RunOutput ro(common.out_dir, common.format, "persuade optimal",
                 common.seed);
    ro.param("instance", common.instance);
    ro.param("sender", sender);
    json j;
    j["sender_value"] = res.sender_value;
    j["alice_value"] = res.alice_value;
    j["scheme"] = res.scheme.rows.to_rows();
    ro.text("optimal.json", j.dump(2) + "\n");
    ro.flush();
  });

  auto* p_mono = persuade->add_subcommand("monopoly", "lone-advisor optimum");
  add_common(p_mono);
  p_mono->add_option("--bob", bob_index, "0-based advisor index")->required();
  handlers.emplace_back(p_mono, [&] {
    const PersuasionInstance inst = load_instance_opt(common);
    const auto res =
        monopoly_deterministic_scheme(inst, bob_index, mode_of(common));
    out << "action_map " << join_ints(res.action_map, '|') << "\n";
    out << "sender_value " << fmt(res.sender_value) << "\n";
    out << "alice_value " << fmt(res.alice_value) << "\n";
    RunOutput ro(common.out_dir, common.format, "persuade monopoly",
                 common.seed);
    ro.param("instance", common.instance);
    ro.param("bob", bob_index);
    ro.param("receiver", common.receiver);
    json j;
    j["action_map"] = res.action_map;
    j["sender_value"] = res.sender_value;
    j["alice_value"] = res.alice_value;
    ro.text("monopoly.json", j.dump(2) + "\n");
    ro.flush();
  });

  auto* p_obl = persuade->add_subcommand("oblivious", "joint naive senders");
  add_common(p_obl);
  p_obl->add_option("--bobs", bobs, "'all' or index list");
  p_obl->add_option("--schemes", schemes, "per-sender scheme choice")
      ->check(CLI::IsMember({"lp", "monopoly"}));
  handlers.emplace_back(p_obl, [&] {
    const PersuasionInstance inst = load_instance_opt(common);
    const std::vector<int> senders = parse_committee(bobs, inst.num_bobs());
    std::vector<SignalingScheme> sch;
    for (int b : senders) {
      if (b < 0 || static_cast<std::size_t>(b) >= inst.num_bobs())
        throw DomainError("advisor index out of range");
      if (schemes == "lp") {
        const auto res = optimal_persuasion_lp(
            inst, inst.bob_utilities[static_cast<std::size_t>(b)]);
        if (res.status != LpStatus::kOptimal)
          throw NumericalFailure("persuasion program did not solve");
        sch.push_back(res.scheme);
      } else {
        sch.push_back(
            monopoly_deterministic_scheme(inst, b, mode_of(common)).scheme);
      }
    }
    const double v = oblivious_joint_evaluation(inst, sch);
    out << "alice_value " << fmt(v) << "\n";
    RunOutput ro(common.out_dir, common.format, "persuade oblivious",
                 common.seed);
    ro.param("instance", common.instance);
    ro.param("bobs", bobs);
    ro.param("schemes", schemes);
    json j;
    j["alice_value"] = v;
    ro.text("oblivious.json", j.dump(2) + "\n");
    ro.flush();
  });

  // ---------- fitting & scaling ----------
  auto* fit_cmd = app.add_subcommand("fit", "fit agent weights to truth");
  add_common(fit_cmd, /*with_instance=*/false);
  fit_cmd->add_option("--scores", scores_path, "score CSV path")->required();
  fit_cmd->add_option("--method", method, "fit method")
      ->check(CLI::IsMember({"nnls", "simplex", "baselines"}));
  handlers.emplace_back(fit_cmd, [&] {
    const ScoreMatrix m = load_scores(scores_path);
    RunOutput ro(common.out_dir, common.format, "fit", common.seed);
    ro.param("scores", scores_path);
    ro.param("method", method);
    if (method == "baselines") {
      const auto rep = least_squares_baselines(m.scores, m.truth);
      out << "best_agent " << m.agent_names[static_cast<std::size_t>(
                                  rep.best_index)]
          << "\n";
      out << "best_mse " << fmt(rep.best_mse) << "\n";
      out << "average_mse " << fmt(rep.average_mse) << "\n";
      Table t;
      t.columns = {"best_agent", "best_mse", "average_mse"};
      t.add({m.agent_names[static_cast<std::size_t>(rep.best_index)],
             fmt(rep.best_mse), fmt(rep.average_mse)});
      ro.table("baselines", t);
    } else {
      const AlignmentFit f = method == "nnls" ? nnls(m.scores, m.truth)
                                              : simplex_fit(m.scores, m.truth);
      out << "mse " << fmt(f.mse) << "\n";
      out << "support " << f.support.size() << "\n";
      for (std::size_t j = 0; j < m.num_agents(); ++j)
        out << "w " << m.agent_names[j] << " " << fmt(f.weights[j]) << "\n";
      Table t;
      t.columns = {"agent", "weight"};
      for (std::size_t j = 0; j < m.num_agents(); ++j)
        t.add({m.agent_names[j], fmt(f.weights[j])});
      ro.table("fit", t);
    }
    ro.flush();
  });

  auto* scaling = app.add_subcommand("scaling", "committee-size sweep");
  add_common(scaling, /*with_instance=*/false);
  scaling->add_option("--scores", scores_path, "score CSV path")->required();
  scaling->add_option("--k", k_spec, "'auto' or comma list of sizes");
  scaling->add_option("--permutations", permutations, "agent orders");
  scaling->add_option("--folds", folds, "cross-validation folds");
  handlers.emplace_back(scaling, [&] {
    const ScoreMatrix m = load_scores(scores_path);
    std::vector<int> grid;
    if (k_spec == "auto")
      for (int k = 1; k <= static_cast<int>(m.num_agents()); ++k)
        grid.push_back(k);
    else
      grid = parse_int_list(k_spec, "--k");
    const ScalingCurve curve =
        k_scaling_experiment(m, grid, permutations, folds, common.seed);
    Table t, fig1, fig2;
    t.columns = {"k", "metric", "mean", "std"};
    fig1.columns = {"k",
                    "best_mse_mean",   "best_mse_std",
                    "avg_mse_mean",    "avg_mse_std",
                    "nnls_mse_mean",   "nnls_mse_std",
                    "simplex_mse_mean", "simplex_mse_std"};
    fig2.columns = {"k", "nnls_support_mean", "nnls_support_std",
                    "simplex_support_mean", "simplex_support_std"};
    for (const auto& r : curve.records) {
      const std::string k = std::to_string(r.k);
      t.add({k, "best_mse", fmt(r.best_mse_mean), fmt(r.best_mse_std)});
      t.add({k, "avg_mse", fmt(r.avg_mse_mean), fmt(r.avg_mse_std)});
      t.add({k, "nnls_mse", fmt(r.nnls_mse_mean), fmt(r.nnls_mse_std)});
      t.add({k, "simplex_mse", fmt(r.simplex_mse_mean),
             fmt(r.simplex_mse_std)});
      t.add({k, "nnls_support", fmt(r.nnls_support_mean),
             fmt(r.nnls_support_std)});
      t.add({k, "simplex_support", fmt(r.simplex_support_mean),
             fmt(r.simplex_support_std)});
      fig1.add({k, fmt(r.best_mse_mean), fmt(r.best_mse_std),
                fmt(r.avg_mse_mean), fmt(r.avg_mse_std), fmt(r.nnls_mse_mean),
                fmt(r.nnls_mse_std), fmt(r.simplex_mse_mean),
                fmt(r.simplex_mse_std)});
      fig2.add({k, fmt(r.nnls_support_mean), fmt(r.nnls_support_std),
                fmt(r.simplex_support_mean), fmt(r.simplex_support_std)});
      out << "k " << k << " nnls_mse " << fmt(r.nnls_mse_mean) << " best_mse "
          << fmt(r.best_mse_mean) << "\n";
    }
    RunOutput ro(common.out_dir, common.format, "scaling", common.seed);
    ro.param("scores", scores_path);
    ro.param("k", k_spec);
    ro.param("permutations", permutations);
    ro.param("folds", folds);
    ro.param("fold_scheme",
             "items shuffled once per permutation seed (seed+p), contiguous "
             "blocks, independent splits per permutation");
    ro.table("scaling", t);
    ro.table("fig1", fig1, /*figure=*/true);
    ro.table("fig2", fig2, /*figure=*/true);
    ro.flush();
  });

  auto* gen = app.add_subcommand("gen-agents", "synthetic noisy agents");
  add_common(gen, /*with_instance=*/false);
  gen->add_option("--items", items, "number of items");
  gen->add_option("--agents", agents, "number of agents");
  gen->add_option("--noise", noise_kind, "noise family")
      ->check(CLI::IsMember({"uniform", "gaussian"}));
  gen->add_option("--width", noise_param, "half-width or sigma");
  handlers.emplace_back(gen, [&] {
    if (items < 1) throw DomainError("need at least one item");
    Rng rng(common.seed);
    std::vector<double> truth(static_cast<std::size_t>(items));
    for (double& v : truth) v = rng.uniform();
    NoiseModel model;
    model.kind = noise_kind == "uniform" ? NoiseModel::Kind::kUniform
                                         : NoiseModel::Kind::kGaussian;
    model.param = noise_param;
    // Agent noise gets its own stream so the item count does not shift it.
    const GeneratedAgents g =
        generate_noisy_agents(truth, agents, model, common.seed + 1);
    const std::string csv = scores_to_csv(g.scores);
    if (common.out_dir.empty()) {
      out << csv;
    } else {
      out << "items " << items << "\n";
      out << "agents " << agents << "\n";
      for (std::size_t a = 0; a < g.realized_bias.size(); ++a)
        out << "bias " << g.scores.agent_names[a] << " "
            << fmt(g.realized_bias[a]) << "\n";
      RunOutput ro(common.out_dir, common.format, "gen-agents", common.seed);
      ro.param("items", items);
      ro.param("agents", agents);
      ro.param("noise", noise_kind);
      ro.param("width", noise_param);
      ro.text("scores.csv", csv);
      ro.flush();
    }
  });

  auto* hoef = app.add_subcommand("hoeffding", "committee size rule");
  hoef->add_option("--actions", actions, "action count")->required();
  hoef->add_option("--states", states, "state count")->required();
  hoef->add_option("--eps", eps, "alignment tolerance")->required();
  hoef->add_option("--delta", delta, "failure probability")->required();
  handlers.emplace_back(hoef, [&] {
    out << hoeffding_committee_size(actions, states, eps, delta) << "\n";
  });

  auto* vprop = app.add_subcommand("validate-prop-a1",
                                   "Monte Carlo committee-size check");
  vprop->add_option("--actions", actions, "action count");
  vprop->add_option("--states", states, "state count");
  vprop->add_option("--eps", eps, "alignment tolerance");
  vprop->add_option("--delta", delta, "failure probability");
  vprop->add_option("--trials", trials, "Monte Carlo trials");
  vprop->add_option("--seed", common.seed, "random seed");
  handlers.emplace_back(vprop, [&] {
    const int k = hoeffding_committee_size(actions, states, eps, delta);
    const double rate = validate_alignment_probability(actions, states, eps,
                                                       delta, trials,
                                                       common.seed);
    out << "k " << k << "\n";
    out << "trials " << trials << "\n";
    out << "failure_rate " << fmt(rate) << "\n";
    out << "delta " << fmt(delta) << "\n";
    out << "within_bound " << (rate <= delta + 1e-12 ? "true" : "false")
        << "\n";
  });

  // ---------- conversation ----------
  auto* conv = app.add_subcommand("conversation", "two-party belief exchange");
  conv->require_subcommand(1);

  auto* c_run = conv->add_subcommand("run", "straightforward conversation");
  c_run->add_option("--prior", prior_name, "prior fixture name or JSON path");
  c_run->add_option("--out", common.out_dir, "output directory");
  c_run->add_option("--format", common.format, "table format")
      ->check(CLI::IsMember({"csv", "json"}));
  c_run->add_option("--xa", xa, "first party's feature index");
  c_run->add_option("--xb", xb, "counterpart's feature index");
  c_run->add_option("--rounds", rounds, "conversation rounds");
  handlers.emplace_back(c_run, [&] {
    const DiscreteJointPrior prior = load_joint_prior_opt(prior_name);
    const auto res = run_straightforward_conversation(prior, xa, xb, rounds);
    Table t;
    t.columns = {"round"};
    const std::size_t nact = prior.num_actions();
    for (std::size_t a = 0; a < nact; ++a)
      t.columns.push_back("alice_a" + std::to_string(a));
    for (std::size_t a = 0; a < nact; ++a)
      t.columns.push_back("bob_a" + std::to_string(a));
    t.columns.push_back("sup_gap");
    for (std::size_t r = 0; r < res.alice_beliefs.size(); ++r) {
      std::vector<std::string> row{std::to_string(r)};
      double sup = 0.0;
      for (std::size_t a = 0; a < nact; ++a) {
        row.push_back(fmt(res.alice_beliefs[r][a]));
        sup = std::max(sup, std::abs(res.alice_beliefs[r][a] -
                                     res.bob_beliefs[r][a]));
      }
      for (std::size_t a = 0; a < nact; ++a)
        row.push_back(fmt(res.bob_beliefs[r][a]));
      row.push_back(fmt(sup));
      t.add(std::move(row));
      out << "round " << r << " gap " << fmt(sup) << "\n";
    }
    RunOutput ro(common.out_dir, common.format, "conversation run",
                 common.seed);
    ro.param("prior", prior_name);
    ro.param("xa", xa);
    ro.param("xb", xb);
    ro.param("rounds", rounds);
    ro.table("conversation", t);
    ro.flush();
  });

  auto* c_agree = conv->add_subcommand("agreement", "first close-belief round");
  c_agree->add_option("--prior", prior_name, "prior fixture name or JSON path");
  c_agree->add_option("--xa", xa, "first party's feature index");
  c_agree->add_option("--xb", xb, "counterpart's feature index");
  c_agree->add_option("--rounds", rounds, "conversation rounds");
  c_agree->add_option("--zeta", zeta, "agreement tolerance");
  handlers.emplace_back(c_agree, [&] {
    const DiscreteJointPrior prior = load_joint_prior_opt(prior_name);
    const auto res = run_straightforward_conversation(prior, xa, xb, rounds);
    out << "agreement_round " << agreement_round(res, zeta) << "\n";
  });

  auto* c_subs = conv->add_subcommand("substitutes", "diminishing-value check");
  c_subs->add_option("--prior", prior_name, "prior fixture name or JSON path");
  c_subs->add_flag("--sampled", sampled, "sample subset pairs instead");
  c_subs->add_option("--samples", samples, "sampled subset pairs");
  c_subs->add_option("--seed", common.seed, "random seed");
  handlers.emplace_back(c_subs, [&] {
    const DiscreteJointPrior prior = load_joint_prior_opt(prior_name);
    const auto rep =
        info_substitutes_check(prior, !sampled, samples, common.seed);
    out << "holds " << (rep.holds ? "true" : "false") << "\n";
    out << "max_violation " << fmt(rep.max_violation) << "\n";
    out << "pairs_checked " << rep.pairs_checked << "\n";
    if (!rep.holds) {
      out << "witness_action " << rep.witness_action << "\n";
      out << "witness_a " << join_ints(rep.witness_a, '|') << "\n";
      out << "witness_b " << join_ints(rep.witness_b, '|') << "\n";
    }
  });

  auto* bounds = app.add_subcommand("bounds", "guarantee arithmetic");
  bounds->require_subcommand(1);
  auto* b49 = bounds->add_subcommand("thm49", "conversation deficit bound");
  b49->add_option("--actions", actions, "action count");
  b49->add_option("--rounds", conv_rounds, "conversation rounds K");
  b49->add_option("--delta", delta_conv, "convergence failure probability");
  b49->add_option("--lambda", lambda, "quantal precision");
  b49->add_option("--eps", deficit_eps, "misalignment epsilon");
  handlers.emplace_back(b49, [&] {
    const auto b =
        theorem_bounds(actions, conv_rounds, delta_conv, lambda, deficit_eps);
    out << "zeta " << fmt(b.zeta) << "\n";
    out << "estimation_error " << fmt(b.estimation_error) << "\n";
    out << "quantal_gap " << fmt(b.quantal_gap) << "\n";
    out << "total_deficit " << fmt(b.total_deficit) << "\n";
    out << "corollary_applicable "
        << (b.corollary_applicable ? "true" : "false") << "\n";
    out << "corollary_deficit " << fmt(b.corollary_deficit) << "\n";
    out << "rounds_for_zeta " << fmt(b.rounds_for_zeta) << "\n";
  });

  // ---------- fixtures ----------
  auto* fixtures = app.add_subcommand("fixtures", "embedded reference data");
  fixtures->require_subcommand(1);
  auto* f_list = fixtures->add_subcommand("list", "names of embedded data");
  handlers.emplace_back(f_list, [&] {
    for (const auto& n : fixture_names()) out << "instance " << n << "\n";
    for (const auto& n : joint_prior_fixture_names())
      out << "prior " << n << "\n";
  });
  auto* f_dump = fixtures->add_subcommand("dump", "write a fixture as JSON");
  f_dump->add_option("--name", fixture_name, "fixture name")->required();
  f_dump->add_option("--out", common.out_dir, "output directory");
  handlers.emplace_back(f_dump, [&] {
    const auto inames = fixture_names();
    const auto pnames = joint_prior_fixture_names();
    std::string text;
    if (std::find(inames.begin(), inames.end(), fixture_name) != inames.end())
      text = instance_to_json(fixture(fixture_name));
    else if (std::find(pnames.begin(), pnames.end(), fixture_name) !=
             pnames.end())
      text = joint_prior_to_json(joint_prior_fixture(fixture_name));
    else
      throw DomainError("unknown fixture \"" + fixture_name + "\"");
    if (common.out_dir.empty()) {
      out << text;
    } else {
      RunOutput ro(common.out_dir, common.format, "fixtures dump",
                   common.seed);
      ro.param("name", fixture_name);
      ro.text(fixture_name + ".json", text);
      ro.flush();
    }
  });

  // ---------- parse & dispatch ----------
  std::vector<const char*> argv;
  argv.push_back("alignmarket");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    for (auto& [cmd, fn] : handlers)
      if (cmd->parsed()) {
        fn();
        return 0;
      }
    err << "usage error: no subcommand selected\n";
    return 2;
  } catch (const UsageFailure& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace alignmarket
