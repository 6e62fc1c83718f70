// Parameter-sweep harness for the block-Markov simulator (not a test; used
// to pick the desk-scale operating point recorded in the acceptance suite).

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <vector>

#include "coordination/binary_example.hpp"
#include "coordination/coord_sim.hpp"

using namespace coord;

int main(int argc, char** argv) {
    const double alpha = argc > 1 ? std::atof(argv[1]) : 0.45;
    const int seeds = argc > 2 ? std::atoi(argv[2]) : 15;
    const CoordinationProblem p = make_target({alpha, 0.1});
    const JointDist e = embed_w_equals_x(target_joint(p));

    std::cout << "n,B,rate,typ_tol,med_tv_all,med_tv_core,enc_fail,dec_fail,ambig\n";
    for (int n : {50, 100, 200}) {
        for (double bits : {8.0, 10.0, 12.0}) {
            for (double typ : {0.15, 0.2, 0.25, 0.3, 0.35}) {
                SimConfig cfg;
                cfg.n = n;
                cfg.block_count = 20;
                cfg.rate_override = bits / n;
                cfg.typ_tol = typ;
                cfg.coord_tol = 0.3;
                std::vector<double> tva, tvc;
                long ef = 0, df = 0, amb = 0;
                for (int s = 0; s < seeds; ++s) {
                    cfg.seed = 42000 + static_cast<std::uint64_t>(s);
                    cfg.trials = 1;
                    auto [trace, rep] = run_session(p, e, cfg);
                    (void)trace;
                    tva.push_back(rep.tv_all);
                    tvc.push_back(rep.tv_core);
                    ef += rep.encoder_failures;
                    df += rep.decoder_failures;
                    amb += rep.decode_ambiguities;
                }
                std::sort(tva.begin(), tva.end());
                std::sort(tvc.begin(), tvc.end());
                std::cout << n << ',' << 20 << ',' << bits / n << ',' << typ << ','
                          << tva[tva.size() / 2] << ',' << tvc[tvc.size() / 2] << ','
                          << ef << ',' << df << ',' << amb << "\n"
                          << std::flush;
            }
        }
    }
    return 0;
}
