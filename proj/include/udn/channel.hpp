#ifndef UDN_CHANNEL_HPP
#define UDN_CHANNEL_HPP

#include <Eigen/Dense>
#include <complex>

#include "udn/rng.hpp"
#include "udn/topology.hpp"

namespace udn {

using cxd = std::complex<double>;

/// Normalized CSI. Column k stacks the per-AN L-vectors of UE k; block (m,k)
/// is sqrt(SNR_ref) * (d_mk/d_edge)^(-alpha/2) * delta_mk with unit-variance
/// complex Gaussian fading delta. Noise power is 1 after this normalization.
struct ChannelRealization {
    Eigen::MatrixXcd H;  // (M*L) x K
    int L = 0;
    int M = 0;
    int K = 0;

    Eigen::VectorBlock<const Eigen::MatrixXcd::ConstColXpr> block(int m, int k) const {
        return H.col(k).segment(m * L, L);
    }
    Eigen::MatrixXcd::ConstColXpr ue_channel(int k) const { return H.col(k); }
};

enum class SupportCase { CaseI_SingleServing, CaseII_JointActive };

/// Stacked precoders; column k carries both beam weights and power for UE k.
/// Blocks outside the declared support are exactly zero.
struct PrecodingMatrix {
    Eigen::MatrixXcd W;  // (M*L) x K
    SupportCase support_case = SupportCase::CaseI_SingleServing;
};

/// Unit-variance fading draws, independent of SNR and large-scale gains.
Eigen::MatrixXcd draw_unit_fading(int M, int L, int K, RandomStream& rng);

/// Applies sqrt(SNR_ref * normalized_gain) per (AN, UE) block to unit fading.
ChannelRealization assemble_channel(const Topology& topology, const Eigen::MatrixXcd& delta,
                                    double snr_ref_db, int L);

ChannelRealization draw_fading(const Topology& topology, const Scenario& scenario, RandomStream& rng);

/// |h_k^H w_k|^2 / (1 + sum_{i != k} |h_k^H w_i|^2), unit noise.
double sinr(const ChannelRealization& H, const PrecodingMatrix& W, int k);

/// Per-UE spectral efficiencies log2(1 + sinr_k), bit/s/Hz.
Eigen::VectorXd rates(const ChannelRealization& H, const PrecodingMatrix& W);

inline double worse_rate(const Eigen::VectorXd& r) { return r.minCoeff(); }
inline double sum_rate(const Eigen::VectorXd& r) { return r.sum(); }

/// Entry (k, i) = |h_k^H w_i|^2 over unit-norm beam directions: the effective
/// gain from UE i's beam into UE k's receiver. Nonzero columns must have unit
/// norm or the call is rejected.
Eigen::MatrixXd effective_gains(const ChannelRealization& H, const PrecodingMatrix& beam_directions);

} // namespace udn

#endif
