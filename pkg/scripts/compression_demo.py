"""Round-trip a few texts through the skill-index codec and compare corpus
bit counts with the expected-cost formula."""

import argparse

import numpy as np

from skilltext.compression import Catalog, CodecConfig, decode_text, encode_text, measure_corpus, \
    synthetic_corpus
from skilltext.graph_model import SingleClassConfig, sample_single_class
from skilltext.learners import psi_one_skill
from skilltext.peeling import run_scns


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--num-skills", type=int, default=10_000)
    ap.add_argument("--c", type=float, default=3.0)
    ap.add_argument("--R", type=float, default=2.0)
    ap.add_argument("--texts", type=int, default=10_000)
    args = ap.parse_args()

    graph = sample_single_class(SingleClassConfig(args.num_skills, args.R, args.c))
    catalog = Catalog.from_learned(run_scns(graph, psi_one_skill()).learned)
    print(f"catalog: {len(catalog)} learned skills, {catalog.width}-bit indices")
    for skills, raw in synthetic_corpus(1, 5, args.c, args.num_skills, 30):
        bits = encode_text(skills, catalog, raw)
        back = decode_text(bits, catalog)
        path = "semantic" if bits[0] == "1" else "raw"
        ok = back == frozenset(np.unique(skills).tolist()) if path == "semantic" else back == raw
        print(f"  skills {sorted(set(skills.tolist()))}: {path}, {len(bits)} bits, round trip {ok}")

    rep = measure_corpus(CodecConfig(args.num_skills, args.c, args.R), num_texts=args.texts)
    print(f"mean bits/text {rep.mean_bits:.2f} (payload {rep.mean_payload_bits:.2f}), "
          f"formula {rep.expected_bits:.2f}, understood fraction {rep.semantic_fraction:.3f}")


if __name__ == "__main__":
    main()
