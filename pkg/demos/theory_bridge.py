"""Compare closed-form LOF / split predictions with detector runs on realised geometries."""

from odsandbox.theory import CHECKS, IdealGeometry, bridge

GEOMETRIES = {
    "lemma1": IdealGeometry(n_b=0, k=150),
    "1": IdealGeometry(d=1.0, D=3.0, k=150),
    "2": IdealGeometry(d=1.0, D=3.0, span=30.0, dims=5),
    "3": IdealGeometry(k=150, inlier_subpops=(800,) + (10,) * 10, outlier_subpops=(25,) * 4),
    "5": IdealGeometry(d=1.0, D=2.0, k=50, m=10, d_out=3.0, D_out=4.0),
}


def main():
    for claim, geom in GEOMETRIES.items():
        pred = CHECKS[claim](geom)
        res = bridge(claim, geom, seed=0)
        values = ", ".join(f"{k}={v:.3f}" for k, v in list(pred.values.items())[:3])
        print(f"{claim:7s} predicted={pred.verdict!s:8s} observed={res.observed:8s} ({values})")


if __name__ == "__main__":
    main()
