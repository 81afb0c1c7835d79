#include "gyrodiff/nn/lstm.hpp"

namespace gyrodiff::nn {

LstmSlots add_lstm(ParameterLayout& layout, Eigen::Index input, Eigen::Index hidden) {
    LstmSlots s;
    s.w_input = layout.add(4 * hidden, input);
    s.w_hidden = layout.add(4 * hidden, hidden);
    s.bias = layout.add(4 * hidden, 1);
    s.input = input;
    s.hidden = hidden;
    return s;
}

void init_lstm(Vector& params, const LstmSlots& s, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.hidden));
    fill_uniform(params, s.w_input, bound, rng);
    fill_uniform(params, s.w_hidden, bound, rng);
    fill_uniform(params, s.bias, bound, rng);
    view(params, s.bias).middleRows(s.hidden, s.hidden).array() += 1.0;
}

Matrix lstm_forward(const Vector& params, const LstmSlots& s, const Matrix& input,
                    SequenceShape shape, bool reverse, LstmTrace* trace) {
    const Eigen::Index H = s.hidden;
    const Eigen::Index B = shape.batch;
    const auto w_in = view(params, s.w_input);
    const auto w_h = view(params, s.w_hidden);
    const auto bias = view(params, s.bias);

    // Input projections for every time step in one product.
    Matrix pre(4 * H, shape.columns());
    pre.noalias() = w_in * input;
    pre.colwise() += bias.col(0);

    Matrix hidden(H, shape.columns());
    if (trace) {
        trace->gates.resize(4 * H, shape.columns());
        trace->cell.resize(H, shape.columns());
    }
    Matrix h_prev = Matrix::Zero(H, B);
    Matrix c_prev = Matrix::Zero(H, B);
    Matrix z(4 * H, B);
    Matrix c(H, B);

    for (Eigen::Index step = 0; step < shape.n_time; ++step) {
        const Eigen::Index t = reverse ? shape.n_time - 1 - step : step;
        z = pre.middleCols(t * B, B);
        z.noalias() += w_h * h_prev;
        z.topRows(2 * H) = sigmoid(z.topRows(2 * H).array()).matrix();
        z.middleRows(2 * H, H) = fast_tanh(z.middleRows(2 * H, H).array()).matrix();
        z.bottomRows(H) = sigmoid(z.bottomRows(H).array()).matrix();

        c.array() = z.middleRows(H, H).array() * c_prev.array() +
                    z.topRows(H).array() * z.middleRows(2 * H, H).array();
        h_prev.array() = z.bottomRows(H).array() * fast_tanh(c.array());
        hidden.middleCols(t * B, B) = h_prev;
        if (trace) {
            trace->gates.middleCols(t * B, B) = z;
            trace->cell.middleCols(t * B, B) = c;
        }
        c_prev.swap(c);
    }
    if (trace) {
        trace->hidden = hidden;
    }
    return hidden;
}

void lstm_backward(const Vector& params, const LstmSlots& s, const Matrix& input,
                   SequenceShape shape, bool reverse, const LstmTrace& trace,
                   const Matrix& d_hidden, Vector& grad, Matrix& d_input) {
    const Eigen::Index H = s.hidden;
    const Eigen::Index B = shape.batch;
    const auto w_in = view(params, s.w_input);
    const auto w_h = view(params, s.w_hidden);

    Matrix d_pre(4 * H, shape.columns());
    Matrix h_prev_all(H, shape.columns());
    Matrix dh_rec = Matrix::Zero(H, B);
    Matrix dc_rec = Matrix::Zero(H, B);
    Eigen::ArrayXXd dh(H, B), dc(H, B), tanh_c(H, B);

    for (Eigen::Index step = shape.n_time - 1; step >= 0; --step) {
        const Eigen::Index t = reverse ? shape.n_time - 1 - step : step;
        const bool first = step == 0;
        const Eigen::Index t_prev = reverse ? t + 1 : t - 1;

        const auto gates = trace.gates.middleCols(t * B, B).array();
        const auto i = gates.topRows(H);
        const auto f = gates.middleRows(H, H);
        const auto g = gates.middleRows(2 * H, H);
        const auto o = gates.bottomRows(H);

        tanh_c = fast_tanh(trace.cell.middleCols(t * B, B).array());
        dh = d_hidden.middleCols(t * B, B).array() + dh_rec.array();
        dc = dh * o * (1.0 - tanh_c.square()) + dc_rec.array();

        auto dz = d_pre.middleCols(t * B, B).array();
        dz.bottomRows(H) = dh * tanh_c * o * (1.0 - o);
        dz.topRows(H) = dc * g * i * (1.0 - i);
        dz.middleRows(2 * H, H) = dc * i * (1.0 - g.square());
        if (first) {
            dz.middleRows(H, H).setZero();
            h_prev_all.middleCols(t * B, B).setZero();
        } else {
            dz.middleRows(H, H) = dc * trace.cell.middleCols(t_prev * B, B).array() * f * (1.0 - f);
            h_prev_all.middleCols(t * B, B) = trace.hidden.middleCols(t_prev * B, B);
        }
        dc_rec.array() = dc * f;
        dh_rec.noalias() = w_h.transpose() * d_pre.middleCols(t * B, B);
    }

    view(grad, s.w_input).noalias() += d_pre * input.transpose();
    view(grad, s.w_hidden).noalias() += d_pre * h_prev_all.transpose();
    view(grad, s.bias) += d_pre.rowwise().sum();
    d_input.noalias() += w_in.transpose() * d_pre;
}

BiLstmSlots add_bilstm(ParameterLayout& layout, Eigen::Index input, Eigen::Index hidden) {
    BiLstmSlots s;
    s.forward = add_lstm(layout, input, hidden);
    s.backward = add_lstm(layout, input, hidden);
    return s;
}

void init_bilstm(Vector& params, const BiLstmSlots& s, Rng& rng) {
    init_lstm(params, s.forward, rng);
    init_lstm(params, s.backward, rng);
}

Matrix bilstm_forward(const Vector& params, const BiLstmSlots& s, const Matrix& input,
                      SequenceShape shape, BiLstmTrace* trace) {
    Matrix out(s.output_size(), shape.columns());
    out.topRows(s.forward.hidden) =
        lstm_forward(params, s.forward, input, shape, false, trace ? &trace->forward : nullptr);
    out.bottomRows(s.backward.hidden) =
        lstm_forward(params, s.backward, input, shape, true, trace ? &trace->backward : nullptr);
    return out;
}

void bilstm_backward(const Vector& params, const BiLstmSlots& s, const Matrix& input,
                     SequenceShape shape, const BiLstmTrace& trace, const Matrix& d_output,
                     Vector& grad, Matrix& d_input) {
    lstm_backward(params, s.forward, input, shape, false, trace.forward,
                  d_output.topRows(s.forward.hidden), grad, d_input);
    lstm_backward(params, s.backward, input, shape, true, trace.backward,
                  d_output.bottomRows(s.backward.hidden), grad, d_input);
}

} // namespace gyrodiff::nn
