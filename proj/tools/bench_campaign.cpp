#include <omp.h>

#include <cstdio>
#include <cstdlib>

#include "udn/sim.hpp"

// Times the OpenMP snapshot loop against the serial reference on one campaign
// and checks that both aggregates agree bit for bit.
int main(int argc, char** argv) {
    const int threads = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
    const int snapshots = argc > 2 ? std::atoi(argv[2]) : 12;

    udn::Campaign campaign;
    campaign.base.num_ues = 6;
    campaign.base.num_ans = 8;
    campaign.base.antennas_per_an = 4;
    campaign.base.u_max = 4;
    campaign.snr_grid_db = {10.0, 20.0};
    campaign.strategies = {udn::Strategy::Local, udn::Strategy::CoordPr,
                           udn::Strategy::LocalPowCoord, udn::Strategy::JPcon};
    campaign.n_snapshots = snapshots;
    campaign.master_seed = 1;

    const udn::CampaignResult serial = udn::run_campaign_serial(campaign);
    const udn::CampaignResult parallel = udn::run_campaign(campaign, threads);

    bool identical = serial.cells.size() == parallel.cells.size();
    for (size_t i = 0; identical && i < serial.cells.size(); ++i) {
        identical = serial.cells[i].mean_worse_rate == parallel.cells[i].mean_worse_rate &&
                    serial.cells[i].se_worse_rate == parallel.cells[i].se_worse_rate &&
                    serial.cells[i].mean_sum_rate == parallel.cells[i].mean_sum_rate &&
                    serial.cells[i].n_ok == parallel.cells[i].n_ok;
    }

    std::printf("snapshots            %d\n", snapshots);
    std::printf("serial reference     %.3f s\n", serial.wall_seconds);
    std::printf("openmp x%-2d           %.3f s\n", threads, parallel.wall_seconds);
    std::printf("speedup              %.2fx\n", serial.wall_seconds / parallel.wall_seconds);
    std::printf("bitwise identical    %s\n", identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
