#!/usr/bin/env python3
"""Download MovieLens archives into data/.

ML-100K and ML-1M are fetched from grouplens.org. When that host is not
reachable, ML-100K is rebuilt in its native layout (u.data, u.user, u.item)
from the copy bundled in the RecBole wheel on PyPI.
"""

import argparse
import io
import pathlib
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

GROUPLENS = "https://files.grouplens.org/datasets/movielens/{}.zip"
GENRES_100K = [
    "unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
    "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
    "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
]
RECBOLE = "recbole==1.2.1"


def from_grouplens(name, dest):
    try:
        with urllib.request.urlopen(GROUPLENS.format(name), timeout=30) as resp:
            payload = resp.read()
    except OSError as err:
        print(f"{name}: grouplens.org unreachable ({err})", file=sys.stderr)
        return False
    with zipfile.ZipFile(io.BytesIO(payload)) as archive:
        archive.extractall(dest)
    return True


def atomic_rows(text):
    lines = text.splitlines()
    return [line.split("\t") for line in lines[1:] if line]


def from_recbole(dest):
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", RECBOLE, "--no-deps", "-q", "-d", tmp],
            check=True)
        wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        prefix = "recbole/dataset_example/ml-100k/ml-100k"
        with zipfile.ZipFile(wheel) as archive:
            inter = archive.read(prefix + ".inter").decode("latin-1")
            items = archive.read(prefix + ".item").decode("latin-1")
            users = archive.read(prefix + ".user").decode("latin-1")

    out = dest / "ml-100k"
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "u.data", "w", encoding="latin-1", newline="\n") as f:
        for user, item, rating, stamp in atomic_rows(inter):
            f.write(f"{user}\t{item}\t{int(float(rating))}\t{int(float(stamp))}\n")
    with open(out / "u.user", "w", encoding="latin-1", newline="\n") as f:
        for user, age, gender, occupation, zipcode in atomic_rows(users):
            f.write(f"{user}|{age}|{gender}|{occupation}|{zipcode}\n")
    with open(out / "u.item", "w", encoding="latin-1", newline="\n") as f:
        for item, title, year, genres in atomic_rows(items):
            flags = ["0"] * len(GENRES_100K)
            for genre in genres.split(" "):
                flags[GENRES_100K.index(genre)] = "1"
            if year.isdigit():
                title, date = f"{title} ({year})", f"01-Jan-{year}"
            else:
                date = ""
            f.write("|".join([item, title, date, "", ""] + flags) + "\n")
    return True


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dest", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    parser.add_argument("--ml-1m", action="store_true", help="also fetch ML-1M")
    args = parser.parse_args()
    dest = pathlib.Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)

    if not (dest / "ml-100k" / "u.data").exists():
        if not from_grouplens("ml-100k", dest):
            print("ml-100k: rebuilding from the RecBole wheel", file=sys.stderr)
            from_recbole(dest)
    print(f"ml-100k ready in {dest / 'ml-100k'}")

    if args.ml_1m and not (dest / "ml-1m" / "ratings.dat").exists():
        if from_grouplens("ml-1m", dest):
            print(f"ml-1m ready in {dest / 'ml-1m'}")
        else:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
