"""Deterministic synthetic dataset: patient history (relational), physiologic
waveforms (array), free-form clinical notes (text).

Everything derives from one xorshift64 stream (shift constants 13/7/17) in a
fixed call order, so equal GenSpecs produce byte-identical snapshots. The
loader places the three objects on one engine per island and registers them
in the catalog.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .catalog import Catalog
from .cluster import EngineRegistry
from .engines import ARRAY, RELATIONAL, TEXT
from .errors import DuplicateObject, NoSuchObject, NoUpEngineForIsland
from .model import Schema, ValueKind

MASK64 = (1 << 64) - 1
_ZERO_SEED_STATE = 0x9E3779B97F4A7C15  # xorshift is stuck at state 0


class XorShift64:
    """Marsaglia xorshift64: x ^= x<<13; x ^= x>>7; x ^= x<<17."""

    def __init__(self, seed: int):
        self.state = seed & MASK64 or _ZERO_SEED_STATE

    def next_u64(self) -> int:
        x = self.state
        x = (x ^ (x << 13)) & MASK64
        x ^= x >> 7
        x = (x ^ (x << 17)) & MASK64
        self.state = x
        return x

    def randint(self, n: int) -> int:
        """Uniform-ish integer in [0, n)."""
        return self.next_u64() % n

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) / float(1 << 53)


PATIENTS_SCHEMA = Schema(
    [
        ("id", ValueKind.INT64),
        ("name", ValueKind.TEXT),
        ("age", ValueKind.INT64),
        ("sex", ValueKind.TEXT),
    ]
)

VITALS_ATTRS = Schema([("hr", ValueKind.FLOAT64), ("spo2", ValueKind.FLOAT64)])

FIRST_NAMES = [
    "Ada", "Alan", "Anita", "Barbara", "Carl", "Dana", "Dennis", "Edith",
    "Edsger", "Frances", "Grace", "Hal", "Hedy", "Ivan", "Jean", "John",
    "Katherine", "Ken", "Leslie", "Lynn", "Margaret", "Maurice", "Niklaus",
    "Radia", "Raj", "Richard", "Robert", "Rosalind", "Sophie", "Tim",
    "Vint", "Whitfield",
]
LAST_NAMES = [
    "Allen", "Baker", "Carter", "Chen", "Clark", "Davis", "Diaz", "Evans",
    "Flores", "Garcia", "Gray", "Hall", "Harris", "Hill", "Jones", "Kim",
    "Lee", "Lewis", "Lopez", "Martin", "Miller", "Moore", "Nguyen", "Patel",
    "Reed", "Rivera", "Scott", "Singh", "Torres", "Walker", "Ward", "Young",
]

# exactly 64 words so one 6-bit draw picks a word
NOTE_VOCAB = [
    "admitted", "afebrile", "agitated", "alert", "ambulating", "analgesia",
    "anemia", "antibiotics", "arrhythmia", "baseline", "bradycardia", "chills",
    "consult", "cough", "creatinine", "culture", "dialysis", "diarrhea",
    "discharge", "diuresis", "dressing", "dyspnea", "edema", "elevated",
    "extubated", "fever", "fluids", "glucose", "hypotension", "hypoxia",
    "improving", "infection", "insulin", "intubated", "labs", "lactate",
    "lethargic", "monitor", "morphine", "nausea", "overnight", "oxygen",
    "pain", "pending", "platelets", "pressors", "responsive", "rounds",
    "saline", "sedation", "sepsis", "stable", "tachycardia", "telemetry",
    "tolerating", "transfer", "transfusion", "unchanged", "ventilator",
    "vitals", "weaning", "worsening", "wound", "reviewed",
]

NOTES_COLFAM = "notes"
NOTES_COLQUAL = "body"
NOTES_TS_BASE = 1_700_000_000_000  # epoch ms; one second per note


@dataclass(frozen=True)
class GenSpec:
    seed: int
    n_patients: int
    waveform_len: int
    n_notes: int

    def __post_init__(self):
        for field_name in ("n_patients", "waveform_len", "n_notes"):
            if getattr(self, field_name) < 0:
                raise ValueError(f"{field_name} must be >= 0")


@dataclass
class GenOutput:
    patients: List[Tuple]
    vitals_dims: List[Tuple[str, int, int]]
    vitals_cells: List[Tuple[Tuple[int, int], Tuple[float, float]]]
    notes: List[Tuple[str, str, str, int, str]]


def _round1(x: float) -> float:
    return round(x * 10.0) / 10.0


def generate(spec: GenSpec) -> GenOutput:
    rng = XorShift64(spec.seed)

    patients = []
    for pid in range(spec.n_patients):
        name = f"{FIRST_NAMES[rng.randint(32)]} {LAST_NAMES[rng.randint(32)]}"
        age = 18 + rng.randint(82)
        sex = "F" if rng.randint(2) == 0 else "M"
        patients.append((pid, name, age, sex))

    cells = []
    for pid in range(spec.n_patients):
        base_hr = 62.0 + rng.uniform() * 34.0
        for t in range(spec.waveform_len):
            hr = base_hr + (rng.uniform() - 0.5) * 8.0
            if rng.randint(40) == 0:
                hr += 45.0 + rng.uniform() * 25.0  # transient tachycardic spike
            spo2 = 95.0 + rng.uniform() * 4.9
            if rng.randint(50) == 0:
                spo2 = 82.0 + rng.uniform() * 7.0  # desaturation dip
            cells.append(((pid, t), (_round1(hr), _round1(spo2))))

    notes = []
    if spec.n_patients > 0:
        per_patient: Dict[int, int] = {}
        for k in range(spec.n_notes):
            pid = rng.randint(spec.n_patients)
            idx = per_patient.get(pid, 0)
            per_patient[pid] = idx + 1
            n_words = 8 + rng.randint(7)
            words = [NOTE_VOCAB[rng.randint(64)] for _ in range(n_words)]
            notes.append(
                (f"p{pid}/n{idx}", NOTES_COLFAM, NOTES_COLQUAL, NOTES_TS_BASE + k * 1000, " ".join(words))
            )

    dims = [
        ("patient_id", 0, max(0, spec.n_patients - 1)),
        ("t", 0, max(0, spec.waveform_len - 1)),
    ]
    return GenOutput(patients, dims, cells, notes)


OBJECT_ISLANDS = {"patients": RELATIONAL, "vitals": ARRAY, "notes": TEXT}


def parse_query_file(text: str) -> List[Tuple[str, str]]:
    """Example-query file: `-- name` line, query line(s), blank-line separator."""
    queries = []
    name, body = None, []
    for raw in text.splitlines() + [""]:
        line = raw.rstrip()
        if line.startswith("--"):
            name = line[2:].strip()
            body = []
        elif line.strip() == "":
            if name and body:
                queries.append((name, "\n".join(body)))
            name, body = None, []
        elif name is not None:
            body.append(line)
    return queries


def default_placement(catalog: Catalog) -> Dict[str, str]:
    """Lowest-eid up engine per island, one per generated object."""
    placement = {}
    engines = catalog.list_engines()
    for obj, island in OBJECT_ISLANDS.items():
        candidates = [e for e in engines if e.kind == island and e.status == "up"]
        if not candidates:
            raise NoUpEngineForIsland(f"no up engine for the {island} island", island=island)
        placement[obj] = min(candidates, key=lambda e: e.eid).name
    return placement


def load_dataset(
    registry: EngineRegistry,
    catalog: Catalog,
    spec: GenSpec,
    placement: Optional[Dict[str, str]] = None,
    replace: bool = False,
) -> Dict[str, int]:
    """Generate and place patients/vitals/notes; returns per-object counts."""
    placement = placement or default_placement(catalog)
    data = generate(spec)

    for obj in OBJECT_ISLANDS:
        try:
            entry, eng = catalog.resolve(obj)
        except NoSuchObject:
            continue
        if not replace:
            raise DuplicateObject(f"object {obj!r} already loaded (use replace)")
        catalog.deregister_object(obj)
        registry.get(eng.name).call(lambda e: e.drop_object(obj))

    rel_handle = registry.get(placement["patients"])
    rel_handle.call(lambda e: e.create_table("patients", PATIENTS_SCHEMA))
    rel_handle.call(lambda e: e.insert("patients", data.patients))
    catalog.register_object(
        "patients", ",".join(PATIENTS_SCHEMA.names), placement["patients"], RELATIONAL
    )

    arr_handle = registry.get(placement["vitals"])
    arr_handle.call(lambda e: e.create_array("vitals", data.vitals_dims, VITALS_ATTRS))
    arr_handle.call(lambda e: e.put_cells("vitals", data.vitals_cells))
    dim_names = [d[0] for d in data.vitals_dims]
    catalog.register_object(
        "vitals", ",".join(dim_names + VITALS_ATTRS.names), placement["vitals"], ARRAY
    )

    kv_handle = registry.get(placement["notes"])
    kv_handle.call(lambda e: e.create_kv("notes"))
    kv_handle.call(lambda e: e.put("notes", data.notes))
    catalog.register_object(
        "notes", "row,colfam,colqual,ts,value", placement["notes"], TEXT
    )

    return {
        "patients": len(data.patients),
        "vitals": len(data.vitals_cells),
        "notes": len(data.notes),
    }
