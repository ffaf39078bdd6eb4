"""Local models that fake a CH violation on the detected subsample.

Builds the detection-loophole model for the singlet-like pair at several
efficiencies, then a channel-dependent model that biases the semileptonic
estimate of |p|/|q|.
"""

import argparse

from kaonbell.lhv_models import (
    OPTIMAL_SINGLET_SETTINGS,
    ChRoles,
    InfeasibleResult,
    build_channel_dependent_model,
    build_detection_loophole_model,
    ch_check_detected,
    ch_check_full_ensemble,
    ratio_estimates,
    sample,
    singlet_target,
    statistics,
)


def detection_part(etas, loss):
    target = singlet_target(*OPTIMAL_SINGLET_SETTINGS)
    roles = ChRoles("f1", "f3", "f2", "f4")
    print(f"detection loophole, loss model = {loss}")
    print(f"{'eta':>6} {'feasible':>9} {'#lambda':>8} {'detected margin':>16} {'full margin':>12}")
    for eta in etas:
        m = build_detection_loophole_model(target, eta, loss=loss, roles=roles)
        if isinstance(m, InfeasibleResult):
            print(f"{eta:6.3f} {'no':>9}   max feasible eta = {m.max_feasible_eta:.6f}")
            continue
        det, full = ch_check_detected(m), ch_check_full_ensemble(m)
        print(f"{eta:6.3f} {'yes':>9} {len(m.lambdas):8d} {det.margin:16.6f} {full.margin:12.6f}")


def channel_part(bias, n, seed):
    branching = {"semileptonic": 0.5, "pi+pi-": 0.35, "2pi0": 0.15}
    m = build_channel_dependent_model(branching, bias)
    if isinstance(m, InfeasibleResult):
        print(f"\nchannel model infeasible: {m.reason}")
        return
    est = ratio_estimates(m)
    print(f"\nchannel-dependent model, requested bias {bias}")
    for k, v in est.items():
        print(f"  {k:>13}: {v:.9f}")
    counts = sample(m, ("decay", "decay"), n, seed)
    exact = statistics(m, ("decay", "decay")).full_joint
    worst = max(abs(counts.get(k, 0) / n - p) for k, p in exact.items())
    print(f"  {n} sampled pairs, worst cell deviation {worst:.2e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--etas", default="0.6,0.7,0.8,0.82,0.83,0.85,0.9")
    ap.add_argument("--loss", choices=["independent", "free"], default="independent")
    ap.add_argument("--bias", type=float, default=0.01)
    ap.add_argument("-n", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    detection_part([float(x) for x in args.etas.split(",")], args.loss)
    channel_part(args.bias, args.n, args.seed)


if __name__ == "__main__":
    main()
