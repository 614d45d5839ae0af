#!/usr/bin/env python3
"""Fetch MovieLens 100k and write it as data/ml-100k/{u.data,movies.dat}.

u.data keeps the original tab-separated layout. movies.dat is written in the
double-colon layout of the larger MovieLens releases
("MovieID::Title (YYYY)::Genre1|Genre2") so one item-feature parser serves both.

Sources, in order: the GroupLens archive, then the copy bundled in the
RecBole wheel on PyPI (useful behind a package-only mirror).
"""

import argparse
import io
import pathlib
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

GROUPLENS_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
GENRES = ["unknown", "Action", "Adventure", "Animation", "Children's", "Comedy", "Crime",
          "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror", "Musical", "Mystery",
          "Romance", "Sci-Fi", "Thriller", "War", "Western"]


def from_grouplens():
    with urllib.request.urlopen(GROUPLENS_URL, timeout=30) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    ratings = archive.read("ml-100k/u.data").decode("latin-1")
    movies = []
    for line in archive.read("ml-100k/u.item").decode("latin-1").splitlines():
        fields = line.split("|")
        if len(fields) < 24:
            continue
        genres = [g for g, flag in zip(GENRES, fields[5:24]) if flag == "1"]
        movies.append(f"{fields[0]}::{fields[1]}::{'|'.join(genres)}")
    return ratings, movies


def from_recbole():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([sys.executable, "-m", "pip", "download", "recbole==1.2.1", "--no-deps",
                        "-d", tmp, "-q"], check=True)
        wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        archive = zipfile.ZipFile(wheel)
        inter = archive.read("recbole/dataset_example/ml-100k/ml-100k.inter").decode("utf-8")
        item = archive.read("recbole/dataset_example/ml-100k/ml-100k.item").decode("utf-8")
    ratings = "".join(line + "\n" for line in inter.splitlines()[1:] if line.strip())
    movies = []
    for line in item.splitlines()[1:]:
        fields = line.split("\t")
        if len(fields) < 4:
            continue
        title = fields[1].strip()
        if fields[2].strip():
            title += f" ({fields[2].strip()})"
        movies.append(f"{fields[0]}::{title}::{'|'.join(fields[3].split())}")
    return ratings, movies


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dest", default=str(pathlib.Path(__file__).resolve().parent.parent
                                              / "data" / "ml-100k"))
    args = parser.parse_args()
    dest = pathlib.Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    try:
        ratings, movies = from_grouplens()
        source = "grouplens"
    except Exception as exc:  # noqa: BLE001
        print(f"grouplens download failed ({exc}); trying the RecBole wheel", file=sys.stderr)
        ratings, movies = from_recbole()
        source = "recbole wheel"
    (dest / "u.data").write_text(ratings)
    (dest / "movies.dat").write_text("\n".join(movies) + "\n")
    print(f"wrote {dest} from {source}: {ratings.count(chr(10))} ratings, {len(movies)} movies")


if __name__ == "__main__":
    main()
