#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "alignmarket/cli.hpp"
#include "alignmarket/core.hpp"
#include "alignmarket/dialogue.hpp"
#include "alignmarket/hull.hpp"
#include "alignmarket/market.hpp"
#include "alignmarket/optim.hpp"
#include "alignmarket/persuasion.hpp"

namespace py = pybind11;
using namespace alignmarket;

namespace {

using Rows = std::vector<std::vector<double>>;

// Matrices cross the boundary as plain lists of rows.
void def_matrix_prop(auto& cls, const char* name, auto member) {
  cls.def_property(
      name,
      [member](const typename std::remove_reference_t<decltype(cls)>::type& s) {
        return (s.*member).to_rows();
      },
      [member](typename std::remove_reference_t<decltype(cls)>::type& s,
               const Rows& rows) { s.*member = Matrix::from_rows(rows); });
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "persuasion markets, alignment fitting, and belief conversations";

  py::register_exception<Error>(m, "AlignmentError");

  py::enum_<ReceiverMode>(m, "ReceiverMode")
      .value("OBEDIENT", ReceiverMode::kObedient)
      .value("POSTERIOR_BEST_RESPONSE", ReceiverMode::kPosteriorBestResponse);

  auto inst = py::class_<PersuasionInstance>(m, "PersuasionInstance")
                  .def(py::init<>())
                  .def_readwrite("states", &PersuasionInstance::states)
                  .def_readwrite("actions", &PersuasionInstance::actions)
                  .def_readwrite("prior", &PersuasionInstance::prior)
                  .def_readwrite("bob_names", &PersuasionInstance::bob_names)
                  .def("num_states", &PersuasionInstance::num_states)
                  .def("num_actions", &PersuasionInstance::num_actions)
                  .def("num_bobs", &PersuasionInstance::num_bobs)
                  .def("validate", &PersuasionInstance::validate);
  def_matrix_prop(inst, "alice_utility", &PersuasionInstance::alice_utility);
  inst.def_property(
      "bob_utilities",
      [](const PersuasionInstance& s) {
        std::vector<Rows> out;
        for (const auto& u : s.bob_utilities) out.push_back(u.to_rows());
        return out;
      },
      [](PersuasionInstance& s, const std::vector<Rows>& rows) {
        s.bob_utilities.clear();
        for (const auto& r : rows)
          s.bob_utilities.push_back(Matrix::from_rows(r));
      });

  auto scheme = py::class_<SignalingScheme>(m, "SignalingScheme")
                    .def(py::init<>())
                    .def("message_count", &SignalingScheme::message_count)
                    .def_static("deterministic", &SignalingScheme::deterministic,
                                py::arg("action_map"), py::arg("message_count"));
  def_matrix_prop(scheme, "rows", &SignalingScheme::rows);

  m.def("fixture_names", &fixture_names);
  m.def("fixture", &fixture, py::arg("name"));
  m.def("instance_from_json", &instance_from_json, py::arg("text"));
  m.def("instance_to_json", &instance_to_json, py::arg("instance"));
  m.def("load_instance", &load_instance, py::arg("path"));
  m.def("save_instance", &save_instance, py::arg("instance"), py::arg("path"));
  m.def("uniform_prior", &uniform_prior, py::arg("n"));
  m.def("with_prior", &with_prior, py::arg("instance"), py::arg("prior"));

  m.def("posterior", &posterior, py::arg("instance"), py::arg("scheme"),
        py::arg("message"));
  m.def("best_response", &best_response, py::arg("instance"),
        py::arg("belief"));
  m.def(
      "expected_utility",
      [](const PersuasionInstance& i, const SignalingScheme& s,
         ReceiverMode mode, const Rows& payoff) {
        return expected_utility(i, s, mode, Matrix::from_rows(payoff));
      },
      py::arg("instance"), py::arg("scheme"), py::arg("mode"),
      py::arg("payoff"));
  m.def("first_best", &first_best, py::arg("instance"));

  // --- single-sender persuasion ---
  py::class_<MonopolyResult>(m, "MonopolyResult")
      .def_readonly("action_map", &MonopolyResult::action_map)
      .def_readonly("scheme", &MonopolyResult::scheme)
      .def_readonly("sender_value", &MonopolyResult::sender_value)
      .def_readonly("alice_value", &MonopolyResult::alice_value);
  py::class_<PersuasionLpResult>(m, "PersuasionLpResult")
      .def_readonly("scheme", &PersuasionLpResult::scheme)
      .def_readonly("sender_value", &PersuasionLpResult::sender_value)
      .def_readonly("alice_value", &PersuasionLpResult::alice_value);
  m.def("deterministic_scheme_count", &deterministic_scheme_count);
  m.def("decode_scheme_map", &decode_scheme_map, py::arg("instance"),
        py::arg("index"));
  m.def("monopoly_deterministic_scheme", &monopoly_deterministic_scheme,
        py::arg("instance"), py::arg("bob_index"), py::arg("mode"));
  m.def(
      "optimal_persuasion_lp",
      [](const PersuasionInstance& i, const Rows& sender_utility) {
        return optimal_persuasion_lp(i, Matrix::from_rows(sender_utility));
      },
      py::arg("instance"), py::arg("sender_utility"));
  m.def("oblivious_joint_evaluation", &oblivious_joint_evaluation,
        py::arg("instance"), py::arg("schemes"));
  m.def("alice_optimal_scheme", &alice_optimal_scheme, py::arg("instance"));

  // --- selection game ---
  py::class_<Committee>(m, "Committee")
      .def(py::init([](const PersuasionInstance& inst,
                       const std::vector<int>& members) {
             return Committee{inst, members};
           }),
           py::arg("instance"), py::arg("members"))
      .def_readwrite("members", &Committee::members)
      .def("validate", &Committee::validate);
  py::class_<StableScheme>(m, "StableScheme")
      .def_readonly("action_map", &StableScheme::action_map)
      .def_readonly("alice_value", &StableScheme::alice_value)
      .def_readonly("member_values", &StableScheme::member_values);
  py::class_<EquilibriumReport>(m, "EquilibriumReport")
      .def_readonly("stable", &EquilibriumReport::stable)
      .def_readonly("min_alice_utility", &EquilibriumReport::min_alice_utility)
      .def_readonly("argmin_index", &EquilibriumReport::argmin_index);
  m.def("enumerate_symmetric_equilibria", &enumerate_symmetric_equilibria,
        py::arg("committee"), py::arg("mode"));
  py::class_<BrdStep>(m, "BrdStep")
      .def_readonly("round", &BrdStep::round)
      .def_readonly("deviator", &BrdStep::deviator)
      .def_readonly("scheme_map", &BrdStep::scheme_map)
      .def_readonly("selected", &BrdStep::selected)
      .def_readonly("alice_utility", &BrdStep::alice_utility)
      .def_readonly("deviator_value", &BrdStep::deviator_value);
  py::class_<BrdTrajectory>(m, "BrdTrajectory")
      .def_readonly("steps", &BrdTrajectory::steps)
      .def_readonly("converged", &BrdTrajectory::converged)
      .def_readonly("rounds", &BrdTrajectory::rounds)
      .def_readonly("final_map", &BrdTrajectory::final_map)
      .def_readonly("final_alice_utility", &BrdTrajectory::final_alice_utility)
      .def_readonly("final_selected", &BrdTrajectory::final_selected);
  m.def("best_response_dynamics", &best_response_dynamics,
        py::arg("committee"), py::arg("mode"), py::arg("max_rounds") = -1);
  py::class_<MisalignmentScore>(m, "MisalignmentScore")
      .def_readonly("epsilon", &MisalignmentScore::epsilon)
      .def_readonly("weights", &MisalignmentScore::weights)
      .def_readonly("offset", &MisalignmentScore::offset);
  m.def("misalignment_epsilon", &misalignment_epsilon, py::arg("committee"),
        py::arg("report"), py::arg("mode"));
  py::class_<BoundReport>(m, "BoundReport")
      .def_readonly("first_best", &BoundReport::first_best)
      .def_readonly("epsilon", &BoundReport::epsilon)
      .def_readonly("bound", &BoundReport::bound)
      .def_readonly("min_alice_utility", &BoundReport::min_alice_utility)
      .def_readonly("brd_utility", &BoundReport::brd_utility)
      .def_readonly("satisfied", &BoundReport::satisfied)
      .def_readonly("slack", &BoundReport::slack);
  m.def("check_theorem_bound", &check_theorem_bound, py::arg("committee"),
        py::arg("mode"));
  py::class_<PathRecord>(m, "PathRecord")
      .def_readonly("path_id", &PathRecord::path_id)
      .def_readonly("k", &PathRecord::k)
      .def_readonly("added_member", &PathRecord::added_member)
      .def_readonly("members", &PathRecord::members)
      .def_readonly("min_alice_utility", &PathRecord::min_alice_utility)
      .def_readonly("epsilon", &PathRecord::epsilon)
      .def_readonly("bound", &PathRecord::bound)
      .def_readonly("brd_utility", &PathRecord::brd_utility);
  m.def("committee_paths", &committee_paths, py::arg("instance"),
        py::arg("num_paths"), py::arg("seed"), py::arg("mode"));

  // --- weight fitting ---
  py::class_<AlignmentFit>(m, "AlignmentFit")
      .def_readonly("weights", &AlignmentFit::weights)
      .def_readonly("mse", &AlignmentFit::mse)
      .def_readonly("iterations", &AlignmentFit::iterations)
      .def_readonly("support", &AlignmentFit::support);
  py::class_<BaselineReport>(m, "BaselineReport")
      .def_readonly("best_index", &BaselineReport::best_index)
      .def_readonly("best_mse", &BaselineReport::best_mse)
      .def_readonly("average_mse", &BaselineReport::average_mse);
  m.def(
      "nnls",
      [](const Rows& scores, const std::vector<double>& truth) {
        return nnls(Matrix::from_rows(scores), truth);
      },
      py::arg("scores"), py::arg("truth"));
  m.def(
      "simplex_fit",
      [](const Rows& scores, const std::vector<double>& truth) {
        return simplex_fit(Matrix::from_rows(scores), truth);
      },
      py::arg("scores"), py::arg("truth"));
  m.def(
      "least_squares_baselines",
      [](const Rows& scores, const std::vector<double>& truth) {
        return least_squares_baselines(Matrix::from_rows(scores), truth);
      },
      py::arg("scores"), py::arg("truth"));

  // --- score matrices & scaling ---
  auto sm = py::class_<ScoreMatrix>(m, "ScoreMatrix")
                .def(py::init<>())
                .def_readwrite("items", &ScoreMatrix::items)
                .def_readwrite("truth", &ScoreMatrix::truth)
                .def_readwrite("agent_names", &ScoreMatrix::agent_names)
                .def_readwrite("scale", &ScoreMatrix::scale)
                .def("num_items", &ScoreMatrix::num_items)
                .def("num_agents", &ScoreMatrix::num_agents)
                .def("validate", &ScoreMatrix::validate);
  def_matrix_prop(sm, "scores", &ScoreMatrix::scores);
  m.def("load_scores", &load_scores, py::arg("path"));
  m.def("save_scores", &save_scores, py::arg("scores"), py::arg("path"));
  m.def("scores_from_csv", &scores_from_csv, py::arg("text"));
  m.def("scores_to_csv", &scores_to_csv, py::arg("scores"));
  py::enum_<NoiseModel::Kind>(m, "NoiseKind")
      .value("UNIFORM", NoiseModel::Kind::kUniform)
      .value("GAUSSIAN", NoiseModel::Kind::kGaussian);
  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init<>())
      .def_readwrite("kind", &NoiseModel::kind)
      .def_readwrite("param", &NoiseModel::param);
  py::class_<GeneratedAgents>(m, "GeneratedAgents")
      .def_readonly("scores", &GeneratedAgents::scores)
      .def_readonly("realized_bias", &GeneratedAgents::realized_bias);
  m.def("generate_noisy_agents", &generate_noisy_agents, py::arg("truth"),
        py::arg("num_agents"), py::arg("model"), py::arg("seed"));
  py::class_<ScalingRecord>(m, "ScalingRecord")
      .def_readonly("k", &ScalingRecord::k)
      .def_readonly("best_mse_mean", &ScalingRecord::best_mse_mean)
      .def_readonly("best_mse_std", &ScalingRecord::best_mse_std)
      .def_readonly("avg_mse_mean", &ScalingRecord::avg_mse_mean)
      .def_readonly("avg_mse_std", &ScalingRecord::avg_mse_std)
      .def_readonly("nnls_mse_mean", &ScalingRecord::nnls_mse_mean)
      .def_readonly("nnls_mse_std", &ScalingRecord::nnls_mse_std)
      .def_readonly("simplex_mse_mean", &ScalingRecord::simplex_mse_mean)
      .def_readonly("simplex_mse_std", &ScalingRecord::simplex_mse_std)
      .def_readonly("nnls_support_mean", &ScalingRecord::nnls_support_mean)
      .def_readonly("nnls_support_std", &ScalingRecord::nnls_support_std)
      .def_readonly("simplex_support_mean",
                    &ScalingRecord::simplex_support_mean)
      .def_readonly("simplex_support_std", &ScalingRecord::simplex_support_std)
      .def_readonly("best_train_mse_mean", &ScalingRecord::best_train_mse_mean)
      .def_readonly("avg_train_mse_mean", &ScalingRecord::avg_train_mse_mean)
      .def_readonly("nnls_train_mse_mean", &ScalingRecord::nnls_train_mse_mean)
      .def_readonly("simplex_train_mse_mean",
                    &ScalingRecord::simplex_train_mse_mean);
  py::class_<ScalingCurve>(m, "ScalingCurve")
      .def_readonly("k_grid", &ScalingCurve::k_grid)
      .def_readonly("permutations", &ScalingCurve::permutations)
      .def_readonly("folds", &ScalingCurve::folds)
      .def_readonly("seed", &ScalingCurve::seed)
      .def_readonly("records", &ScalingCurve::records)
      .def_readonly("nnls_train_by_perm", &ScalingCurve::nnls_train_by_perm);
  m.def("k_scaling_experiment", &k_scaling_experiment, py::arg("scores"),
        py::arg("k_grid"), py::arg("permutations"), py::arg("folds"),
        py::arg("seed"));
  m.def("hoeffding_committee_size", &hoeffding_committee_size,
        py::arg("num_actions"), py::arg("num_states"), py::arg("epsilon"),
        py::arg("delta"));
  m.def("validate_alignment_probability", &validate_alignment_probability,
        py::arg("num_actions"), py::arg("num_states"), py::arg("epsilon"),
        py::arg("delta"), py::arg("trials"), py::arg("seed"),
        py::arg("noise_half_width") = 0.5);

  // --- conversations ---
  auto jp = py::class_<DiscreteJointPrior>(m, "DiscreteJointPrior")
                .def(py::init<>())
                .def_readwrite("x_a_labels", &DiscreteJointPrior::x_a_labels)
                .def_readwrite("x_b_labels", &DiscreteJointPrior::x_b_labels)
                .def_readwrite("y_labels", &DiscreteJointPrior::y_labels)
                .def_readwrite("pmf", &DiscreteJointPrior::pmf)
                .def("num_actions", &DiscreteJointPrior::num_actions)
                .def("p", &DiscreteJointPrior::p)
                .def("validate", &DiscreteJointPrior::validate);
  def_matrix_prop(jp, "alice_utility", &DiscreteJointPrior::alice_utility);
  m.def("joint_prior_fixture_names", &joint_prior_fixture_names);
  m.def("joint_prior_fixture", &joint_prior_fixture, py::arg("name"));
  m.def("joint_prior_from_json", &joint_prior_from_json, py::arg("text"));
  m.def("joint_prior_to_json", &joint_prior_to_json, py::arg("prior"));
  py::class_<TranscriptEntry>(m, "TranscriptEntry")
      .def_readonly("round", &TranscriptEntry::round)
      .def_readonly("speaker", &TranscriptEntry::speaker)
      .def_readonly("message", &TranscriptEntry::message);
  py::class_<Transcript>(m, "Transcript")
      .def_readonly("histories", &Transcript::histories)
      .def_readonly("rounds", &Transcript::rounds);
  py::class_<ConversationResult>(m, "ConversationResult")
      .def_readonly("transcript", &ConversationResult::transcript)
      .def_readonly("alice_beliefs", &ConversationResult::alice_beliefs)
      .def_readonly("bob_beliefs", &ConversationResult::bob_beliefs);
  m.def("run_straightforward_conversation", &run_straightforward_conversation,
        py::arg("prior"), py::arg("x_a"), py::arg("x_b"), py::arg("rounds"));
  m.def("agreement_round", &agreement_round, py::arg("result"),
        py::arg("zeta"));
  m.def("quantal_response", &quantal_response, py::arg("belief"),
        py::arg("lambda_"));
  m.def("quantal_gap", &quantal_gap, py::arg("belief"), py::arg("lambda_"));
  py::class_<SubstitutesReport>(m, "SubstitutesReport")
      .def_readonly("holds", &SubstitutesReport::holds)
      .def_readonly("max_violation", &SubstitutesReport::max_violation)
      .def_readonly("witness_action", &SubstitutesReport::witness_action)
      .def_readonly("witness_a", &SubstitutesReport::witness_a)
      .def_readonly("witness_b", &SubstitutesReport::witness_b)
      .def_readonly("pairs_checked", &SubstitutesReport::pairs_checked);
  m.def("info_substitutes_check", &info_substitutes_check, py::arg("prior"),
        py::arg("exhaustive") = true, py::arg("samples") = 1000,
        py::arg("seed") = 0);
  py::class_<TheoremBounds>(m, "TheoremBounds")
      .def_readonly("zeta", &TheoremBounds::zeta)
      .def_readonly("estimation_error", &TheoremBounds::estimation_error)
      .def_readonly("quantal_gap", &TheoremBounds::quantal_gap)
      .def_readonly("total_deficit", &TheoremBounds::total_deficit)
      .def_readonly("corollary_deficit", &TheoremBounds::corollary_deficit)
      .def_readonly("corollary_applicable",
                    &TheoremBounds::corollary_applicable)
      .def_readonly("rounds_for_zeta", &TheoremBounds::rounds_for_zeta);
  m.def("theorem_bounds", &theorem_bounds, py::arg("num_actions"),
        py::arg("rounds"), py::arg("delta_conv"), py::arg("lambda_"),
        py::arg("epsilon"));
  m.def("rounds_for_agreement", &rounds_for_agreement, py::arg("num_actions"),
        py::arg("zeta"), py::arg("delta_conv"));

  // --- command line ---
  m.def(
      "run_command",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_command(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"),
      "Run one CLI invocation; returns (exit_code, stdout, stderr).");
}
