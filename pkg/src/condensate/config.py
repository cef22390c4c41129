"""Run configuration: a small INI-style text file.

Schema (every section optional except [torus] and [vortices])::

    [torus]
    omega1 = 1.0+0.0i
    omega2 = 0.0+1.0i

    [vortices]
    # one point per line: position multiplicity, a trailing * marks concentration
    points =
        0.25+0.25i 2 *
        -0.25+0.25i 2
        0.25-0.25i 0
        -0.25-0.25i 2

    [run]
    grid = 256
    tol = 1e-06
    seed = 0
    out = runs

    [params]
    rho = 0.0           (0 = automatic)
    gamma = 0.5
    delta_min = 0.001
    delta_max = 0.1
    delta_count = 5
    eps_start = 0.01
    eps_stop = 0.001
    eps_ratio = 0.8
    zeta_max = 1000.0

Complex numbers are written as "x+yi".
"""
import configparser
import hashlib
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import ConfigInvalid
from .torus_core import Torus, VortexConfig


def parse_complex(text):
    s = text.strip().replace(" ", "")
    if not s:
        raise ConfigInvalid("empty complex number", "complex")
    try:
        return complex(s.replace("i", "j"))
    except ValueError as err:
        raise ConfigInvalid(f"cannot parse complex number {text!r}", "complex") from err


def format_complex(z):
    z = complex(z)
    sign = "-" if (z.imag < 0 or (z.imag == 0 and str(z.imag).startswith("-"))) else "+"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


@dataclass(frozen=True)
class Params:
    rho: float = 0.0
    gamma: float = 0.5
    delta_min: float = 1e-3
    delta_max: float = 1e-1
    delta_count: int = 5
    eps_start: float = 1e-2
    eps_stop: float = 1e-3
    eps_ratio: float = 0.8
    zeta_max: float = 1e3


@dataclass(frozen=True)
class RunConfig:
    omega1: complex = 1 + 0j
    omega2: complex = 1j
    points: tuple = ()
    concentration: tuple = ()
    grid: int = 256
    tol: float = 1e-6
    seed: int = 0
    out: str = "runs"
    params: Params = field(default_factory=Params)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.grid < 16 or self.grid & (self.grid - 1):
            raise ConfigInvalid(f"grid {self.grid} must be a power of two >= 16", "grid")
        if not self.tol > 0:
            raise ConfigInvalid("tol must be positive", "tol")
        p = self.params
        for name in ("delta_min", "delta_max", "eps_start", "eps_stop", "zeta_max"):
            if not getattr(p, name) > 0:
                raise ConfigInvalid(f"{name} must be positive", name)
        if not 0 < p.eps_ratio < 1:
            raise ConfigInvalid("eps_ratio must lie in (0, 1)", "eps_ratio")
        if not 0 < p.gamma < 1:
            raise ConfigInvalid("gamma must lie in (0, 1)", "gamma")
        if p.rho < 0:
            raise ConfigInvalid("rho must be non-negative", "rho")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigInvalid("seed must be an unsigned 64-bit integer", "seed")
        try:
            self.torus
        except ValueError as err:
            raise ConfigInvalid(str(err), "torus") from err
        for i in self.concentration:
            if not 0 <= i < len(self.points):
                raise ConfigInvalid(f"concentration index {i} out of range", "concentration")

    @property
    def torus(self):
        return Torus(self.omega1, self.omega2)

    @property
    def vortices(self):
        return VortexConfig(self.points, self.concentration)

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    # -- text form ----------------------------------------------------------------
    def to_text(self):
        lines = ["[torus]", f"omega1 = {format_complex(self.omega1)}",
                 f"omega2 = {format_complex(self.omega2)}", "", "[vortices]", "points ="]
        for i, (p, n) in enumerate(self.points):
            star = " *" if i in self.concentration else ""
            lines.append(f"    {format_complex(p)} {int(n)}{star}")
        lines += ["", "[run]", f"grid = {self.grid}", f"tol = {self.tol!r}",
                  f"seed = {self.seed}", f"out = {self.out}", "", "[params]"]
        for f in fields(Params):
            lines.append(f"{f.name} = {getattr(self.params, f.name)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            cp.read_string(text)
        except configparser.Error as err:
            raise ConfigInvalid(f"malformed config: {err}", "config") from err
        for sec in ("torus", "vortices"):
            if not cp.has_section(sec):
                raise ConfigInvalid(f"missing [{sec}] section", sec)
        try:
            omega1 = parse_complex(cp["torus"]["omega1"])
            omega2 = parse_complex(cp["torus"]["omega2"])
        except KeyError as err:
            raise ConfigInvalid(f"missing torus period {err}", "torus") from err
        points, conc = [], []
        for raw in cp["vortices"].get("points", "").splitlines():
            tok = raw.split()
            if not tok:
                continue
            if len(tok) not in (2, 3) or (len(tok) == 3 and tok[2] != "*"):
                raise ConfigInvalid(f"bad vortex line {raw!r}", "points")
            try:
                mult = int(tok[1])
            except ValueError as err:
                raise ConfigInvalid(f"bad multiplicity in {raw!r}", "points") from err
            if mult < 0:
                raise ConfigInvalid("multiplicities must be non-negative", "points")
            if len(tok) == 3:
                conc.append(len(points))
            points.append((parse_complex(tok[0]), mult))
        run = cp["run"] if cp.has_section("run") else {}
        kw = {}
        try:
            if "grid" in run:
                kw["grid"] = int(run["grid"])
            if "tol" in run:
                kw["tol"] = float(run["tol"])
            if "seed" in run:
                kw["seed"] = int(run["seed"])
            if "out" in run:
                kw["out"] = run["out"].strip()
            pk = {}
            if cp.has_section("params"):
                types = {f.name: f.type for f in fields(Params)}
                for key, val in cp["params"].items():
                    if key not in types:
                        raise ConfigInvalid(f"unknown parameter {key!r}", key)
                    pk[key] = int(val) if types[key] in (int, "int") else float(val)
        except ValueError as err:
            raise ConfigInvalid(f"bad numeric value: {err}", "config") from err
        return cls(omega1, omega2, tuple(points), tuple(conc), params=Params(**pk), **kw)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def dump(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    def digest(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def as_dict(self):
        d = asdict(self)
        d["omega1"] = format_complex(self.omega1)
        d["omega2"] = format_complex(self.omega2)
        d["points"] = [[format_complex(p), n] for p, n in self.points]
        return d
