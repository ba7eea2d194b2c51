#include "udn/channel.hpp"

#include <cmath>

#include "udn/errors.hpp"

namespace udn {

Eigen::MatrixXcd draw_unit_fading(int M, int L, int K, RandomStream& rng) {
    Eigen::MatrixXcd delta(M * L, K);
    // Column-major draw order: all of UE 0's entries first.
    for (int k = 0; k < K; ++k)
        for (int r = 0; r < M * L; ++r) delta(r, k) = rng.cnormal();
    return delta;
}

ChannelRealization assemble_channel(const Topology& topology, const Eigen::MatrixXcd& delta,
                                    double snr_ref_db, int L) {
    const int K = topology.num_ues();
    const int M = topology.num_ans();
    if (delta.rows() != M * L || delta.cols() != K)
        throw ConfigError("fading matrix dimensions do not match topology");
    const double snr = std::pow(10.0, snr_ref_db / 10.0);
    const Eigen::MatrixXd dist = link_distances(topology);
    ChannelRealization ch;
    ch.L = L;
    ch.M = M;
    ch.K = K;
    ch.H.resize(M * L, K);
    for (int k = 0; k < K; ++k) {
        for (int m = 0; m < M; ++m) {
            const double amp = std::sqrt(snr * normalized_gain(dist(k, m), topology));
            ch.H.col(k).segment(m * L, L) = amp * delta.col(k).segment(m * L, L);
        }
    }
    return ch;
}

ChannelRealization draw_fading(const Topology& topology, const Scenario& scenario, RandomStream& rng) {
    const Eigen::MatrixXcd delta =
        draw_unit_fading(topology.num_ans(), scenario.antennas_per_an, topology.num_ues(), rng);
    return assemble_channel(topology, delta, scenario.snr_ref_db, scenario.antennas_per_an);
}

double sinr(const ChannelRealization& H, const PrecodingMatrix& W, int k) {
    const Eigen::VectorXcd products = W.W.adjoint() * H.H.col(k);  // entry i = (h_k^H w_i)^*
    double interference = 0.0;
    for (int i = 0; i < H.K; ++i)
        if (i != k) interference += std::norm(products(i));
    return std::norm(products(k)) / (1.0 + interference);
}

Eigen::VectorXd rates(const ChannelRealization& H, const PrecodingMatrix& W) {
    Eigen::VectorXd r(H.K);
    for (int k = 0; k < H.K; ++k) r(k) = std::log2(1.0 + sinr(H, W, k));
    return r;
}

Eigen::MatrixXd effective_gains(const ChannelRealization& H, const PrecodingMatrix& beam_directions) {
    const int K = H.K;
    for (int i = 0; i < K; ++i) {
        const double n = beam_directions.W.col(i).norm();
        if (n > 0.0 && std::abs(n - 1.0) > 1e-9)
            throw ConfigError("effective_gains requires unit-norm (or zero) beam columns");
    }
    Eigen::MatrixXd G(K, K);
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < K; ++i)
            G(k, i) = std::norm(H.H.col(k).dot(beam_directions.W.col(i)));
    return G;
}

} // namespace udn
