#pragma once

#include <cstddef>

#include "rnngraph/netdef.hpp"

namespace rnngraph {

struct ElmanSpec {
  std::size_t n_in = 1;
  std::size_t n_hidden = 1;
  std::size_t n_out = 1;
  Activation hidden_activation = Activation::kTanh;
  Activation output_activation = Activation::kSoftmax;
  bool bias = true;
};

/// Elman network: x -> h (dense), h -> h (dense, delay 1), h -> y (dense).
/// Layer names: "input", "hidden", "output" (+ "bias").
NetworkDef build_elman(const ElmanSpec& spec);

struct LstmSpec {
  std::size_t n_in = 1;
  std::size_t n_cell = 1;
  std::size_t n_out = 1;
  bool peepholes = true;
  bool forget_gate = true;
  /// Delay of the cell -> output gate peephole (0 reads the current cell).
  std::size_t output_peephole_delay = 0;
  /// Adds dense delay-1 edges from the LSTM output to the block input and
  /// every gate. Off by default: the reference language-model LSTM has no
  /// such recurrence.
  bool output_recurrence = false;
  Activation output_activation = Activation::kSoftmax;
  bool bias = true;
};

/// LSTM layer with forget gate and peepholes expressed with additive and
/// multiplicative layers. Layer names:
///   input, bias, block_input, input_gate, forget_gate, output_gate,
///   input_product, forget_product, cell, cell_squash, hidden_product, output
/// (forget_* absent when forget_gate is off, bias absent when bias is off).
NetworkDef build_lstm(const LstmSpec& spec);

/// Number of trainable scalars: sum of rows * cols over Dense connections.
/// With include_bias = false, connections leaving constant layers are skipped.
std::size_t count_params(const NetworkDef& net, bool include_bias = true);

}  // namespace rnngraph
