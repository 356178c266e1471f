#include "alignmarket/core.hpp"

namespace alignmarket {

namespace {

PersuasionInstance make_synthetic1() {
  PersuasionInstance inst;
  inst.states = {"S1", "S2", "S3"};
  inst.actions = {"A", "B", "C"};
  inst.prior = uniform_prior(3);
  inst.alice_utility = Matrix::from_rows({
      {0.545, 0.580, 0.470},
      {0.570, 0.585, 0.538},
      {0.552, 0.555, 0.565},
  });
  inst.bob_names = {"AI1", "AI2", "AI3", "AI4", "AI5"};
  inst.bob_utilities = {
      Matrix::from_rows({{0.80, 0.50, 0.30},
                         {0.45, 0.75, 0.35},
                         {0.70, 0.40, 0.50}}),
      Matrix::from_rows({{0.40, 0.90, 0.30},
                         {0.70, 0.40, 0.60},
                         {0.30, 0.75, 0.55}}),
      Matrix::from_rows({{0.30, 0.40, 0.85},
                         {0.55, 0.60, 0.80},
                         {0.50, 0.55, 0.80}}),
      Matrix::from_rows({{0.60, 0.60, 0.40},
                         {0.80, 0.50, 0.45},
                         {0.85, 0.45, 0.35}}),
      Matrix::from_rows({{0.55, 0.35, 0.75},
                         {0.30, 0.65, 0.55},
                         {0.40, 0.70, 0.65}}),
  };
  return inst;
}

PersuasionInstance make_synthetic2() {
  PersuasionInstance inst;
  inst.states = {"S1", "S2", "S3"};
  inst.actions = {"A", "B", "C", "H"};
  inst.prior = uniform_prior(3);
  inst.alice_utility = Matrix::from_rows({
      {0.92, 0.10, 0.10, 0.78},
      {0.10, 0.92, 0.10, 0.78},
      {0.10, 0.10, 0.92, 0.78},
  });
  inst.bob_names = {"AI1", "AI2", "AI3", "AI4", "AI5"};
  inst.bob_utilities = {
      Matrix::from_rows({{0.95, 0.80, 0.20, 0.70},
                         {0.20, 0.10, 0.20, 0.70},
                         {0.20, 0.20, 0.10, 0.70}}),
      Matrix::from_rows({{0.10, 0.20, 0.80, 0.70},
                         {0.80, 0.95, 0.20, 0.70},
                         {0.20, 0.20, 0.10, 0.70}}),
      Matrix::from_rows({{0.10, 0.20, 0.20, 0.70},
                         {0.20, 0.10, 0.80, 0.70},
                         {0.80, 0.20, 0.95, 0.70}}),
      Matrix::from_rows({{0.10, 0.20, 0.20, 0.70},
                         {0.20, 0.10, 0.20, 0.70},
                         {0.20, 0.80, 0.10, 0.70}}),
      Matrix::from_rows({{0.10, 0.20, 0.20, 0.70},
                         {0.20, 0.10, 0.20, 0.70},
                         {0.20, 0.20, 0.10, 0.70}}),
  };
  return inst;
}

PersuasionInstance make_movielens() {
  PersuasionInstance inst;
  inst.states = {"Action", "Comedy", "Drama", "SciFi", "Thriller", "Romance"};
  inst.actions = {"m1", "m2", "m3"};  // first/second/third pick per genre
  inst.prior = uniform_prior(6);
  inst.alice_utility = Matrix::from_rows({
      {0.84, 0.85, 0.75},
      {0.83, 0.84, 0.78},
      {0.83, 0.89, 0.84},
      {0.84, 0.85, 0.75},
      {0.84, 0.83, 0.84},
      {0.83, 0.81, 0.70},
  });
  inst.bob_names = {"ActionFan", "ComedyFan",   "DramaFan",
                    "SciFiFan",  "ThrillerFan", "RomanceFan"};
  inst.bob_utilities = {
      Matrix::from_rows({{0.92, 0.91, 0.87},
                         {0.91, 0.87, 0.85},
                         {0.91, 0.94, 0.87},
                         {0.92, 0.91, 0.87},
                         {0.87, 0.93, 0.92},
                         {0.91, 0.82, 0.85}}),
      Matrix::from_rows({{0.94, 0.91, 0.85},
                         {0.89, 0.90, 0.88},
                         {0.89, 0.93, 0.90},
                         {0.94, 0.91, 0.85},
                         {0.90, 0.92, 0.94},
                         {0.89, 0.89, 0.83}}),
      Matrix::from_rows({{0.89, 0.87, 0.80},
                         {0.90, 0.89, 0.84},
                         {0.90, 0.92, 0.89},
                         {0.89, 0.87, 0.80},
                         {0.89, 0.90, 0.89},
                         {0.90, 0.86, 0.77}}),
      Matrix::from_rows({{0.93, 0.93, 0.85},
                         {0.90, 0.84, 0.89},
                         {0.90, 0.92, 0.84},
                         {0.93, 0.93, 0.85},
                         {0.84, 0.92, 0.93},
                         {0.90, 0.85, 0.83}}),
      Matrix::from_rows({{0.89, 0.88, 0.83},
                         {0.89, 0.90, 0.83},
                         {0.89, 0.93, 0.90},
                         {0.89, 0.88, 0.83},
                         {0.90, 0.91, 0.89},
                         {0.89, 0.84, 0.80}}),
      Matrix::from_rows({{0.87, 0.86, 0.80},
                         {0.88, 0.90, 0.84},
                         {0.88, 0.91, 0.90},
                         {0.87, 0.86, 0.80},
                         {0.90, 0.91, 0.87},
                         {0.88, 0.90, 0.81}}),
  };
  return inst;
}

PersuasionInstance make_appendix_b() {
  PersuasionInstance inst;
  inst.states = {"guilty", "innocent"};
  inst.actions = {"acquit", "convict"};
  inst.prior = {2.0 / 3.0, 1.0 / 3.0};
  inst.alice_utility = Matrix::from_rows({{1.0, 2.0}, {2.0, 1.0}});
  inst.bob_names = {"prosecutor", "defense"};
  inst.bob_utilities = {
      Matrix::from_rows({{0.0, 2.0}, {0.0, 1.0}}),
      Matrix::from_rows({{1.0, 0.0}, {2.0, 0.0}}),
  };
  return inst;
}

}  // namespace

std::vector<std::string> fixture_names() {
  return {"synthetic1", "synthetic2", "movielens", "appendix_b"};
}

PersuasionInstance fixture(const std::string& name) {
  PersuasionInstance inst;
  if (name == "synthetic1")
    inst = make_synthetic1();
  else if (name == "synthetic2")
    inst = make_synthetic2();
  else if (name == "movielens")
    inst = make_movielens();
  else if (name == "appendix_b")
    inst = make_appendix_b();
  else
    throw DomainError("unknown fixture \"" + name + "\"");
  inst.validate();
  return inst;
}

}  // namespace alignmarket
