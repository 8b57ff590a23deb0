# # Writing maps in the expression language
#
# Fibre lifts are written as expressions in theta and x. Parameters can be
# bound by name, derivatives are taken symbolically, and configs can come
# from TOML or JSON files.

import tempfile
from pathlib import Path

from qpforce import load_config, map_from_config
from qpforce.expression import parse_map_expression
from qpforce.models import build_map, validate_homeomorphism

f = parse_map_expression("x + c + K/(2*pi)*sin(2*pi*x) + eps*sin(2*pi*theta)", {"c": 0.25, "K": 0.5, "eps": 0.3})
df = f.diff("x")
print(f(0.1, 0.2), df.source, df(0.1, 0.2))

# A lift must satisfy T(x + 1) = T(x) + 1 and increase in x.
print(validate_homeomorphism(parse_map_expression("x + 0.1 + 1.5/(2*pi)*sin(2*pi*x)"), 64, 64))

with tempfile.TemporaryDirectory() as tmp:
    cfg = Path(tmp) / "arnold.toml"
    cfg.write_text('family = "arnold"\n[params]\nc = 0.25\nK = 0.5\neps = 0.3\n')
    m = map_from_config(load_config(cfg))
    print(m.label, m.step(0.1, 0.2))

custom = build_map("custom", params={"expression": "x + 0.2 + 0.05*sin(2*pi*x)*cos(2*pi*theta)"})
print(custom.label, custom.step(0.5, 0.0))
