"""Expected support function of a three-integrand family at ten checkpoints."""
import argparse

from svset.experiment import run_trend


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--steps", type=int, default=100)
    args = ap.parse_args()
    rep = run_trend(args.seed, args.samples, args.steps)
    print(f"verdict {rep['verdict']}, smallest paired z {rep['min_z']:.2f} at {rep['worst']}")
    for step, row in zip(rep["checkpoint_steps"], rep["mean_support"]):
        print(f"step {step:>4}  mean support over directions {sum(row) / len(row):.4f}")


if __name__ == "__main__":
    main()
