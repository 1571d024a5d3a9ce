"""The accuracy/recomputation trade-off on the built-in tiny transformer.

Runs a small sweep: key-query scores accumulated at several mantissa widths,
with and without guided recomputation, against the float32 reference. Writes
the rows to demo_results.csv next to this script (ready for plotting).
"""

import pathlib
import tempfile

from lamp_infer import (
    ExperimentConfig,
    make_tiny_dataset,
    make_tiny_model,
    run_sweep,
    write_tokens,
    write_weights,
)

here = pathlib.Path(__file__).parent
out_csv = here / "demo_results.csv"

with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    config, weights = make_tiny_model(seed=0)
    write_weights(tmp / "tiny.lampw", weights, config)
    write_tokens(tmp / "tiny.lampt", make_tiny_dataset(0, 8, 128, config.vocab_size))

    print("=== Guided recomputation at several accumulator widths ===")
    rows = run_sweep(
        ExperimentConfig(
            weights_path=str(tmp / "tiny.lampw"),
            dataset_path=str(tmp / "tiny.lampt"),
            sequence_count=8,
            sequence_length=128,
            mu_list=(2, 4, 7, 10),
            tau_list=(1.2,),
            mode="lamp",
            output_path=str(out_csv),
        ),
        threads=4,
    )
    print(f"  {'mu':>3} {'mean KL':>10} {'flip rate':>10} {'recomp rate':>12} {'eff. bits':>10}")
    for r in rows:
        print(f"  {r.mu:>3} {r.mean_kl:>10.2e} {r.flip_rate:>10.3f} "
              f"{r.recomputation_rate:>12.4f} {r.effective_mantissa_bits:>10.2f}")

    print()
    print("=== Same budget, random picks (the guidance is what matters) ===")
    for mode in ("lamp", "random", "off"):
        rows = run_sweep(
            ExperimentConfig(
                weights_path=str(tmp / "tiny.lampw"),
                dataset_path=str(tmp / "tiny.lampt"),
                sequence_count=8,
                sequence_length=128,
                mu_list=(4,),
                tau_list=(1.2,),
                mode=mode,
            ),
            threads=4,
        )
        r = rows[0]
        print(f"  mode {mode:>6}: mean KL {r.mean_kl:.2e}  recomp rate {r.recomputation_rate:.4f}")

print()
print(f"sweep rows written to {out_csv}")
