#!/usr/bin/env python3
# Copyright 2026 The lmp2 Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates data/datasets/{famous_like,synthetic_like}.json.

All names are invented. Famous-like subjects get planted associations
(q=0.8); a few are planted with a wrong value so the fixture has false
positives. Synthetic-like subjects get no associations at all.
"""

import json
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "datasets"
PROPERTIES = ["eye_color", "native_language", "date_of_birth", "spouse_name",
              "handedness"]

FIRST = ["Marisol", "Thaddeus", "Ingrid", "Oluwaseun", "Perpetua", "Casimir",
         "Yevgenia", "Lorcan", "Anouk", "Benedikt", "Saoirse", "Ezequiel",
         "Henrike", "Tiberius", "Ottilie", "Radomir", "Zuleika", "Fitzgerald",
         "Wilhelmina", "Ignatius", "Evadne", "Leopold", "Romilly", "Augustin",
         "Clementine", "Dashiell", "Philippa", "Barnaby", "Esmeralda", "Quentin",
         "Rosalind", "Valentin", "Octavia", "Cornelius", "Henrietta", "Lysander",
         "Seraphina", "Ambrose", "Imogen", "Jedediah"]
LAST = ["Quillfeather", "Vandermeer", "Okonkwo-Hale", "Brightwater", "Castellane",
        "Dunmore", "Eskildsen", "Fairweather", "Grimaldi-Shaw", "Holloway",
        "Ivanescu", "Jaramillo", "Kettleburn", "Lindqvist", "Marchetti",
        "Nightingale", "Oyelaran", "Pemberton", "Quartermaine", "Rosenthal",
        "Silverton", "Thistlewood", "Underhill", "Valdivieso", "Whitcombe",
        "Xanthopoulos", "Yardley", "Zabrowski", "Ashcombe", "Blackwood",
        "Cheltenham", "Delacroix", "Everhart", "Fenwick", "Gallowglass",
        "Hawthorne", "Iversen", "Juniperhill", "Kingsley", "Lockridge"]

EYES = ["brown", "blue", "green", "hazel", "grey", "amber"]
LANGS = ["English", "Spanish", "Portuguese", "German", "French", "Italian",
         "Japanese", "Swahili", "Dutch", "Polish"]
HANDS = ["right-handed", "left-handed"]
SPOUSES = ["Cordelia", "Evander", "Magdalena", "Rafferty", "Ximena", "Bartholomew",
           "Genevieve", "Horatio", "Leocadia", "Montgomery", "Paloma", "Sebastian",
           "Theodora", "Wendeline", "Anselm", "Briony", "Crispin", "Delphine",
           "Eustace", "Florentyna"]
MONTHS = ["January", "February", "March", "April", "May", "June", "July",
          "August", "September", "October", "November", "December"]


def truths_for(rng):
  day = rng.randint(1, 28)
  month = rng.randint(1, 12)
  year = rng.randint(1940, 1995)
  return {
      "eye_color": [rng.choice(EYES)],
      "native_language": [rng.choice(LANGS)],
      "date_of_birth": [f"{year:04d}-{month:02d}-{day:02d}"],
      "spouse_name": [rng.choice(SPOUSES)],
      "handedness": [rng.choice(HANDS)],
  }


def surface(prop, value, rng):
  # The mock answers in free form; dates come back spelled out.
  if prop == "date_of_birth":
    y, m, d = value.split("-")
    return f"{int(d)} {MONTHS[int(m) - 1]} {y}"
  return value


def wrong_value(prop, truth, rng):
  pools = {"eye_color": EYES, "native_language": LANGS, "handedness": HANDS,
           "spouse_name": SPOUSES}
  if prop == "date_of_birth":
    y, m, d = truth.split("-")
    return f"{d}/{m}/{int(y) + 3}"
  return rng.choice([v for v in pools[prop] if v != truth])


def main():
  rng = random.Random(20261016)
  names = [f"{f} {l}" for f, l in zip(FIRST, LAST)]
  famous, synthetic = names[:20], names[20:]

  subjects, planted = [], []
  wrong = {(3, "spouse_name"), (7, "eye_color"), (11, "date_of_birth"),
           (15, "native_language"), (18, "handedness")}
  for i, name in enumerate(famous):
    truths = truths_for(rng)
    subjects.append({"name": name, "truths": truths})
    for prop in PROPERTIES:
      truth = truths[prop][0]
      value = (wrong_value(prop, truth, rng) if (i, prop) in wrong
               else surface(prop, truth, rng))
      planted.append({"subject": name, "property_id": prop, "value": value,
                      "q": 0.8})
  famous_doc = {
      "name": "famous_like",
      "subjects": subjects,
      "mock": {"seed": 7, "emit_logprobs": True, "model_version": "mock-1",
               "planted": planted,
               "defaults": [{"property_id": "handedness",
                             "value": "right-handed", "b": 0.3}]},
  }
  synthetic_doc = {
      "name": "synthetic_like",
      "subjects": [{"name": n, "properties": PROPERTIES} for n in synthetic],
      "mock": {"seed": 7, "emit_logprobs": True, "model_version": "mock-1"},
  }
  OUT.mkdir(parents=True, exist_ok=True)
  for fname, doc in (("famous_like.json", famous_doc),
                     ("synthetic_like.json", synthetic_doc)):
    (OUT / fname).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")


if __name__ == "__main__":
  main()
