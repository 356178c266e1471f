#include "alignmarket/core.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace alignmarket {

using nlohmann::json;

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rws) {
  Matrix m;
  m.rows = rws.size();
  m.cols = rws.empty() ? 0 : rws.front().size();
  m.data.reserve(m.rows * m.cols);
  for (const auto& row : rws) {
    if (row.size() != m.cols)
      throw DimensionError("matrix rows have unequal lengths");
    m.data.insert(m.data.end(), row.begin(), row.end());
  }
  return m;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows);
  for (std::size_t r = 0; r < rows; ++r)
    out[r].assign(data.begin() + static_cast<long>(r * cols),
                  data.begin() + static_cast<long>((r + 1) * cols));
  return out;
}

namespace {

void check_utility_matrix(const Matrix& u, std::size_t ns, std::size_t na,
                          const std::string& who) {
  if (u.rows != ns || u.cols != na)
    throw DimensionError(who + " utility must be " + std::to_string(ns) + "x" +
                         std::to_string(na) + ", got " +
                         std::to_string(u.rows) + "x" + std::to_string(u.cols));
  for (double v : u.data) {
    if (!std::isfinite(v))
      throw InvariantError(who + " utility has a non-finite entry");
    if (v < 0.0)
      throw InvariantError(who + " utility has a negative entry");
  }
}

}  // namespace

void PersuasionInstance::validate() const {
  const std::size_t ns = num_states();
  const std::size_t na = num_actions();
  if (ns == 0) throw InvariantError("instance has no states");
  if (na == 0) throw InvariantError("instance has no actions");
  if (prior.size() != ns)
    throw DimensionError("prior length " + std::to_string(prior.size()) +
                         " does not match " + std::to_string(ns) + " states");
  double total = 0.0;
  for (double p : prior) {
    if (!std::isfinite(p) || p < -kInputTolerance)
      throw InvariantError("prior has a negative or non-finite entry");
    total += p;
  }
  if (std::abs(total - 1.0) > kInputTolerance)
    throw InvariantError("prior sums to " + std::to_string(total) +
                         ", not 1");
  check_utility_matrix(alice_utility, ns, na, "receiver");
  if (bob_names.size() != bob_utilities.size())
    throw DimensionError("advisor name/utility counts differ");
  for (std::size_t i = 0; i < bob_utilities.size(); ++i)
    check_utility_matrix(bob_utilities[i], ns, na, "advisor " + bob_names[i]);
}

SignalingScheme SignalingScheme::deterministic(
    const std::vector<int>& action_map, std::size_t message_count) {
  SignalingScheme s;
  s.rows = Matrix(action_map.size(), message_count, 0.0);
  for (std::size_t y = 0; y < action_map.size(); ++y) {
    const int m = action_map[y];
    if (m < 0 || static_cast<std::size_t>(m) >= message_count)
      throw DomainError("deterministic map entry out of message range");
    s.rows(y, static_cast<std::size_t>(m)) = 1.0;
  }
  return s;
}

void SignalingScheme::validate(std::size_t num_states) const {
  if (rows.rows != num_states)
    throw DimensionError("scheme has " + std::to_string(rows.rows) +
                         " rows for " + std::to_string(num_states) +
                         " states");
  if (rows.cols == 0) throw InvariantError("scheme has no messages");
  for (std::size_t y = 0; y < rows.rows; ++y) {
    double total = 0.0;
    for (std::size_t m = 0; m < rows.cols; ++m) {
      const double v = rows(y, m);
      if (!std::isfinite(v) || v < -kInputTolerance)
        throw InvariantError("scheme row " + std::to_string(y) +
                             " has a negative or non-finite entry");
      total += v;
    }
    if (std::abs(total - 1.0) > kInputTolerance)
      throw InvariantError("scheme row " + std::to_string(y) +
                           " sums to " + std::to_string(total) + ", not 1");
  }
}

BeliefVector posterior(const PersuasionInstance& inst,
                       const SignalingScheme& scheme, std::size_t message) {
  scheme.validate(inst.num_states());
  if (message >= scheme.message_count())
    throw DomainError("message index out of range");
  BeliefVector post(inst.num_states(), 0.0);
  double marginal = 0.0;
  for (std::size_t y = 0; y < inst.num_states(); ++y) {
    post[y] = inst.prior[y] * scheme.rows(y, message);
    marginal += post[y];
  }
  if (marginal <= 0.0)
    throw ZeroProbabilityMessageError("message " + std::to_string(message) +
                                      " has zero marginal probability");
  for (double& v : post) v /= marginal;
  return post;
}

int best_response(const PersuasionInstance& inst, const BeliefVector& belief) {
  if (belief.size() != inst.num_states())
    throw DimensionError("belief length does not match state count");
  double total = 0.0;
  for (double b : belief) {
    if (!std::isfinite(b) || b < -kComputeTolerance)
      throw InvariantError("belief has a negative or non-finite entry");
    total += b;
  }
  if (std::abs(total - 1.0) > kComputeTolerance)
    throw InvariantError("belief does not sum to 1");
  int best = 0;
  double best_value = -kInf;
  for (std::size_t a = 0; a < inst.num_actions(); ++a) {
    double v = 0.0;
    for (std::size_t y = 0; y < inst.num_states(); ++y)
      v += belief[y] * inst.alice_utility(y, a);
    if (v > best_value + 0.0) {  // strict improvement; ties keep lowest index
      best_value = v;
      best = static_cast<int>(a);
    }
  }
  return best;
}

double expected_utility(const PersuasionInstance& inst,
                        const SignalingScheme& scheme, ReceiverMode mode,
                        const Matrix& payoff) {
  scheme.validate(inst.num_states());
  if (payoff.rows != inst.num_states() || payoff.cols != inst.num_actions())
    throw DimensionError("payoff matrix shape does not match the instance");
  const std::size_t messages = scheme.message_count();
  std::vector<int> action_for_message(messages, -1);
  if (mode == ReceiverMode::kObedient) {
    if (messages != inst.num_actions())
      throw MessageNotAnActionError(
          "obedient receiver needs message space = action set (" +
          std::to_string(messages) + " messages, " +
          std::to_string(inst.num_actions()) + " actions)");
    for (std::size_t m = 0; m < messages; ++m)
      action_for_message[m] = static_cast<int>(m);
  } else {
    for (std::size_t m = 0; m < messages; ++m) {
      double marginal = 0.0;
      for (std::size_t y = 0; y < inst.num_states(); ++y)
        marginal += inst.prior[y] * scheme.rows(y, m);
      if (marginal <= 0.0) continue;  // never sent, contributes nothing
      action_for_message[m] = best_response(inst, posterior(inst, scheme, m));
    }
  }
  double value = 0.0;
  for (std::size_t y = 0; y < inst.num_states(); ++y)
    for (std::size_t m = 0; m < messages; ++m) {
      if (action_for_message[m] < 0) continue;
      value += inst.prior[y] * scheme.rows(y, m) *
               payoff(y, static_cast<std::size_t>(action_for_message[m]));
    }
  return value;
}

double first_best(const PersuasionInstance& inst) {
  double value = 0.0;
  for (std::size_t y = 0; y < inst.num_states(); ++y) {
    double best = -kInf;
    for (std::size_t a = 0; a < inst.num_actions(); ++a)
      best = std::max(best, inst.alice_utility(y, a));
    value += inst.prior[y] * best;
  }
  return value;
}

namespace {

Matrix matrix_from_json(const json& j, const char* field) {
  if (!j.is_array())
    throw SchemaError(std::string(field) + " must be an array of arrays");
  std::vector<std::vector<double>> rows;
  for (const auto& row : j) {
    if (!row.is_array())
      throw SchemaError(std::string(field) + " must be an array of arrays");
    std::vector<double> r;
    for (const auto& v : row) {
      if (!v.is_number())
        throw SchemaError(std::string(field) + " has a non-numeric entry");
      r.push_back(v.get<double>());
    }
    rows.push_back(std::move(r));
  }
  try {
    return Matrix::from_rows(rows);
  } catch (const DimensionError& e) {
    throw SchemaError(std::string(field) + ": " + e.what());
  }
}

std::vector<std::string> strings_from_json(const json& j, const char* field) {
  if (!j.is_array())
    throw SchemaError(std::string(field) + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string())
      throw SchemaError(std::string(field) + " has a non-string entry");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::vector<double> numbers_from_json(const json& j, const char* field) {
  if (!j.is_array())
    throw SchemaError(std::string(field) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number())
      throw SchemaError(std::string(field) + " has a non-numeric entry");
    out.push_back(v.get<double>());
  }
  return out;
}

const json& require(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end())
    throw SchemaError(std::string("missing field \"") + field + "\"");
  return *it;
}

}  // namespace

PersuasionInstance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("top level must be an object");
  PersuasionInstance inst;
  inst.states = strings_from_json(require(j, "states"), "states");
  inst.actions = strings_from_json(require(j, "actions"), "actions");
  inst.prior = numbers_from_json(require(j, "prior"), "prior");
  inst.alice_utility = matrix_from_json(require(j, "alice"), "alice");
  const json& bobs = require(j, "bobs");
  if (!bobs.is_array()) throw SchemaError("bobs must be an array");
  for (const auto& b : bobs) {
    if (!b.is_object()) throw SchemaError("bobs entries must be objects");
    const json& name = require(b, "name");
    if (!name.is_string()) throw SchemaError("bob name must be a string");
    inst.bob_names.push_back(name.get<std::string>());
    inst.bob_utilities.push_back(matrix_from_json(require(b, "u"), "bob u"));
  }
  inst.validate();
  return inst;
}

std::string instance_to_json(const PersuasionInstance& inst) {
  json j;
  j["states"] = inst.states;
  j["actions"] = inst.actions;
  j["prior"] = inst.prior;
  j["alice"] = inst.alice_utility.to_rows();
  json bobs = json::array();
  for (std::size_t i = 0; i < inst.num_bobs(); ++i)
    bobs.push_back(
        {{"name", inst.bob_names[i]}, {"u", inst.bob_utilities[i].to_rows()}});
  j["bobs"] = bobs;
  return j.dump(2) + "\n";
}

PersuasionInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

void save_instance(const PersuasionInstance& inst, const std::string& path) {
  inst.validate();
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path);
  out << instance_to_json(inst);
}

std::vector<double> uniform_prior(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

PersuasionInstance with_prior(PersuasionInstance inst,
                              std::vector<double> prior) {
  inst.prior = std::move(prior);
  inst.validate();
  return inst;
}

}  // namespace alignmarket
