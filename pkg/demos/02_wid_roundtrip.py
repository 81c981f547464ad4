"""
Reading WID-style extracts
==========================

A bulk export is one long table of (country, variable, percentile, year,
value). Here we write one from panels we already know and read it back.
"""

import random

from thriftindex import assemble_dataset, parse_wid_csv, random_scenarios, simulate
from thriftindex.wid import render_wid_csv

panels = [simulate(s) for s in random_scenarios("thrift", 3, 6, seed=7, noise_sd=0.01)]
text = render_wid_csv(panels)
print(text.splitlines()[0])
print(text.splitlines()[1])

# row order does not matter, and neither does the delimiter
header, *rows = text.splitlines(keepends=True)
random.Random(0).shuffle(rows)
back = assemble_dataset(parse_wid_csv(header + "".join(rows)))
print("same panels after shuffle:", back == panels)

comma = render_wid_csv(panels, delimiter=",")
print("same panels from commas:  ", assemble_dataset(parse_wid_csv(comma)) == panels)

# Consumption is the sum of government and household consumption; a year
# missing any of the four inputs is dropped, never filled in.
obs = [o for o in parse_wid_csv(text)
       if not (o.country_code == panels[0].country_code and o.year == panels[0].years[2]
               and o.variable_code.startswith("mconhn"))]
short = assemble_dataset(obs)[0]
print(f"{short.country_code}: {len(panels[0])} years -> {len(short)} years")
