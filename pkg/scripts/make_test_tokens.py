#!/usr/bin/env python3
"""Write the three deterministic speech-shaped test tokens used by the test
suite and demo sessions (real experiments substitute licensed dry speech)."""

import argparse
from pathlib import Path

from brirlab.dsp import write_wav
from brirlab.loudness import make_speech_shaped_token


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="tokens", help="output directory")
    parser.add_argument("--count", type=int, default=3)
    parser.add_argument("--seconds", type=float, default=2.0)
    parser.add_argument("--fs", type=float, default=44100.0)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for seed in range(args.count):
        token = make_speech_shaped_token(args.seconds, args.fs, seed=seed)
        path = out / f"token{seed:02d}.wav"
        write_wav(path, token)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
