#pragma once

#include <vector>

#include "mufide/errors.hpp"
#include "mufide/linalg.hpp"

namespace mufide {

// A bi-fidelity training set. Input dimension is shared; the two fidelity
// sets are otherwise independent samples.
struct MfDataset {
  Matrix hf_inputs;
  Vector hf_outputs;
  Matrix lf_inputs;
  Vector lf_outputs;

  int input_dim() const { return static_cast<int>(hf_inputs.cols()); }
  int n_hf() const { return static_cast<int>(hf_inputs.rows()); }
  int n_lf() const { return static_cast<int>(lf_inputs.rows()); }

  void validate() const {
    if (hf_inputs.rows() == 0) throw EmptyData("dataset: high-fidelity set is empty");
    if (lf_inputs.rows() == 0) throw EmptyData("dataset: low-fidelity set is empty");
    if (hf_inputs.rows() != hf_outputs.size())
      throw DimensionMismatch("dataset: high-fidelity input/output count mismatch");
    if (lf_inputs.rows() != lf_outputs.size())
      throw DimensionMismatch("dataset: low-fidelity input/output count mismatch");
    if (hf_inputs.cols() != lf_inputs.cols())
      throw DimensionMismatch("dataset: fidelity input dimensions differ");
    if (!all_finite(hf_inputs) || !all_finite(hf_outputs) || !all_finite(lf_inputs) ||
        !all_finite(lf_outputs))
      throw DataError("dataset: non-finite entries");
  }

  // Restriction of the high-fidelity set to the given row indices; the full
  // low-fidelity set rides along unchanged (cross-validation splits only
  // ever withhold high-fidelity points).
  MfDataset hf_subset(const std::vector<int>& idx) const {
    MfDataset out;
    out.hf_inputs.resize(static_cast<Eigen::Index>(idx.size()), hf_inputs.cols());
    out.hf_outputs.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.hf_inputs.row(static_cast<Eigen::Index>(i)) = hf_inputs.row(idx[i]);
      out.hf_outputs[static_cast<Eigen::Index>(i)] = hf_outputs[idx[i]];
    }
    out.lf_inputs = lf_inputs;
    out.lf_outputs = lf_outputs;
    return out;
  }
};

}  // namespace mufide
