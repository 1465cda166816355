#!/usr/bin/env python3
"""Write the desk dataset (lexicon, corpus, contacts, users, utterances)
and a desk.json config under the given directory."""

import argparse
import json
import sys

from lazyfst.deskdata import write_desk_data


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=".",
                        help="directory that receives data/desk and desk.json")
    args = parser.parse_args()
    cfg = write_desk_data(args.out)
    print(json.dumps({"config": f"{args.out}/desk.json",
                      "data_dir": cfg["data_dir"]}, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
