// Batched LSTM / bidirectional LSTM with hand-written backpropagation.
//
// Sequence batches are [features x (n_time * batch)] matrices whose column
// t * batch + b holds time step t of sequence b, so one time step is a
// contiguous block of `batch` columns.
#pragma once

#include "gyrodiff/nn/params.hpp"

namespace gyrodiff::nn {

struct SequenceShape {
    Eigen::Index n_time = 0;
    Eigen::Index batch = 0;

    Eigen::Index columns() const { return n_time * batch; }
};

/// One LSTM direction. Gate rows are ordered input, forget, cell, output.
struct LstmSlots {
    Slot w_input;  ///< [4H x in]
    Slot w_hidden; ///< [4H x H]
    Slot bias;     ///< [4H x 1]
    Eigen::Index input = 0;
    Eigen::Index hidden = 0;
};

LstmSlots add_lstm(ParameterLayout& layout, Eigen::Index input, Eigen::Index hidden);

/// U(-1/sqrt(H), 1/sqrt(H)) weights, forget-gate bias +1.
void init_lstm(Vector& params, const LstmSlots& s, Rng& rng);

/// Activations kept for the backward pass.
struct LstmTrace {
    Matrix gates;  ///< activated i, f, g, o [4H x cols]
    Matrix cell;   ///< [H x cols]
    Matrix hidden; ///< [H x cols]
};

/// Runs one direction. `reverse` processes time steps from last to first.
/// Returns hidden states [H x cols] in natural time order. When `trace` is
/// non-null it receives the activations needed by lstm_backward().
Matrix lstm_forward(const Vector& params, const LstmSlots& s, const Matrix& input,
                    SequenceShape shape, bool reverse, LstmTrace* trace);

/// Accumulates parameter gradients into `grad` and input gradients into
/// `d_input` (both +=).
void lstm_backward(const Vector& params, const LstmSlots& s, const Matrix& input,
                   SequenceShape shape, bool reverse, const LstmTrace& trace,
                   const Matrix& d_hidden, Vector& grad, Matrix& d_input);

/// Forward and backward directions; output rows are [h_forward; h_backward].
struct BiLstmSlots {
    LstmSlots forward;
    LstmSlots backward;

    Eigen::Index output_size() const { return forward.hidden + backward.hidden; }
};

struct BiLstmTrace {
    LstmTrace forward;
    LstmTrace backward;
};

BiLstmSlots add_bilstm(ParameterLayout& layout, Eigen::Index input, Eigen::Index hidden);
void init_bilstm(Vector& params, const BiLstmSlots& s, Rng& rng);

Matrix bilstm_forward(const Vector& params, const BiLstmSlots& s, const Matrix& input,
                      SequenceShape shape, BiLstmTrace* trace);

void bilstm_backward(const Vector& params, const BiLstmSlots& s, const Matrix& input,
                     SequenceShape shape, const BiLstmTrace& trace, const Matrix& d_output,
                     Vector& grad, Matrix& d_input);

} // namespace gyrodiff::nn
