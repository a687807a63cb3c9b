"""
Yearly-step micro-simulation of individuals, households and jobs.

A synthetic region of municipalities (grouped into districts) is built by
init_world and advanced one year at a time by step_year. Each calibration
parameter gates exactly the behavior its name describes:

    ageMinHavingChild / ageMaxHavingChild / nbChild -> births
    probabilityToMakeCouple / nbJoinTrials         -> couple formation
    splittingProba                                 -> household splitting
    probToAcceptNewResidence / resSatisfactMargin  -> residence change
    probStudyOutside                               -> student out-migration
    probLookingRegionalJobs / jobVacancyRate       -> labor market

Sub-processes run in a fixed order (aging, deaths, births, coupling,
splitting, residence, education, labor) so a run is reproducible from its
random stream alone.
"""

import bisect
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Set

import numpy as np

from core.config import config
from core.config.settings import SimConfig
from core.tools.indicators import Indicator, IndicatorKey, IndicatorSeries
from core.tools.param_space import Chromosome

logger = logging.getLogger(__name__)


class Sex(Enum):
    A = "A"
    B = "B"  # childbearing role


class Activity(Enum):
    STUDENT = "student"
    WORKER = "worker"
    UNEMPLOYED = "unemployed"
    INACTIVE = "inactive"
    RETIRED = "retired"


class WorldInitError(ValueError):
    pass


@dataclass(slots=True)
class Individual:
    id: int
    age: int
    sex: Sex
    activity: Activity
    residence: int
    household_id: int
    sector: Optional[int] = None
    workplace: Optional[int] = None
    partner_id: Optional[int] = None

    def employ(self, sector: int, workplace: int):
        self.activity = Activity.WORKER
        self.sector = sector
        self.workplace = workplace

    def leave_job(self, activity: Activity):
        self.activity = activity
        self.sector = None
        self.workplace = None


@dataclass(slots=True)
class Household:
    id: int
    member_ids: Set[int]
    municipality: int
    rooms: int


@dataclass(slots=True)
class Municipality:
    id: int
    district_id: int
    job_slots: List[int]
    # Room counts of the vacant dwellings
    vacant_dwellings: List[int] = field(default_factory=list)


@dataclass(slots=True)
class EventCounts:
    births: int = 0
    deaths: int = 0
    out_migrations: int = 0  # left the region
    moves_out: int = 0  # moved to another municipality of the region


@dataclass
class WorldState:
    year: int
    individuals: Dict[int, Individual]
    households: Dict[int, Household]
    municipalities: Dict[int, Municipality]
    events: Dict[int, EventCounts]
    next_individual_id: int = 0
    next_household_id: int = 0

    def new_individual_id(self) -> int:
        self.next_individual_id += 1
        return self.next_individual_id - 1

    def new_household_id(self) -> int:
        self.next_household_id += 1
        return self.next_household_id - 1

    def reset_events(self):
        self.events = {m: EventCounts() for m in self.municipalities}

    def occupied_jobs(self) -> Dict[int, List[int]]:
        """Occupied positions per workplace municipality and sector"""
        occupied = {m.id: [0] * len(m.job_slots) for m in self.municipalities.values()}
        for person in self.individuals.values():
            # Workers without a position are reported by check_integrity, not counted here
            if person.activity is Activity.WORKER and person.workplace in occupied and person.sector is not None:
                occupied[person.workplace][person.sector] += 1
        return occupied

    def total_job_slots(self) -> int:
        return sum(sum(m.job_slots) for m in self.municipalities.values())


# ==============================
# INITIAL POPULATION SYNTHESIS
# ==============================
def init_world(cfg: SimConfig, rng: np.random.Generator) -> WorldState:
    synthesis = cfg.synthesis
    if synthesis.municipalities < 1:
        raise WorldInitError("Cannot build a world without municipalities")
    if synthesis.individuals_per_municipality < 1:
        raise WorldInitError("Cannot build a world without individuals")

    world = WorldState(year=cfg.start_year, individuals={}, households={}, municipalities={}, events={})
    size_weights = np.asarray(synthesis.household_size_weights, dtype=float)
    size_weights = size_weights / size_weights.sum()
    band_weights = np.asarray([b.weight for b in synthesis.adult_age_bands], dtype=float)
    band_weights = band_weights / band_weights.sum()

    def adult_age() -> int:
        band = synthesis.adult_age_bands[int(rng.choice(len(synthesis.adult_age_bands), p=band_weights))]
        return int(rng.integers(band.lowest, band.highest, endpoint=True))

    for m in range(synthesis.municipalities):
        municipality = Municipality(id=m, district_id=synthesis.district_of(m), job_slots=[0] * synthesis.sectors)
        world.municipalities[m] = municipality
        remaining = synthesis.individuals_per_municipality
        while remaining > 0:
            size = min(remaining, int(rng.choice(4, p=size_weights)) + 1)
            remaining -= size
            household = Household(id=world.new_household_id(), member_ids=set(), municipality=m,
                                  rooms=max(1, size + int(rng.integers(-1, 2))))
            world.households[household.id] = household

            first_sex = Sex.A if rng.random() < 0.5 else Sex.B
            head = _add_member(world, household, adult_age(), first_sex)
            if size >= 2:
                partner_age = int(np.clip(head.age + rng.integers(-5, 6), config.ADULT_AGE, config.MAX_AGE - 1))
                partner = _add_member(world, household, partner_age, Sex.B if first_sex is Sex.A else Sex.A)
                head.partner_id, partner.partner_id = partner.id, head.id
            for _ in range(size - 2):
                sex = Sex.A if rng.random() < 0.5 else Sex.B
                _add_member(world, household, int(rng.integers(0, config.ADULT_AGE)), sex)

        vacancies = int(math.ceil(synthesis.vacant_dwelling_share * _household_count(world, m)))
        municipality.vacant_dwellings = [int(r) for r in rng.integers(1, synthesis.max_rooms, size=vacancies, endpoint=True)]

    # Activities, then job positions sized to the initial workforce
    for person in world.individuals.values():
        person.activity = _initial_activity(cfg, person.age, rng)
        if person.activity is Activity.WORKER:
            person.sector = int(rng.integers(synthesis.sectors))
            person.workplace = person.residence
            world.municipalities[person.residence].job_slots[person.sector] += 1
    for municipality in world.municipalities.values():
        municipality.job_slots = [s + synthesis.initial_vacancies_per_sector for s in municipality.job_slots]

    world.reset_events()
    logger.debug(f"Initialized world with {len(world.individuals)} individuals in "
                 f"{len(world.households)} households over {len(world.municipalities)} municipalities")
    return world


def _add_member(world: WorldState, household: Household, age: int, sex: Sex) -> Individual:
    person = Individual(id=world.new_individual_id(), age=age, sex=sex, activity=Activity.INACTIVE,
                        residence=household.municipality, household_id=household.id)
    world.individuals[person.id] = person
    household.member_ids.add(person.id)
    return person


def _household_count(world: WorldState, municipality: int) -> int:
    return sum(1 for h in world.households.values() if h.municipality == municipality)


def _initial_activity(cfg: SimConfig, age: int, rng: np.random.Generator) -> Activity:
    if age < cfg.higher_education_age:
        return Activity.STUDENT
    if age >= cfg.retirement_age:
        return Activity.RETIRED
    draw = rng.random()
    synthesis = cfg.synthesis
    if draw < synthesis.worker_share:
        return Activity.WORKER
    if draw < synthesis.worker_share + synthesis.unemployed_share:
        return Activity.UNEMPLOYED
    return Activity.INACTIVE


# ==============================
# YEARLY DYNAMICS
# ==============================
class _Params:
    """Chromosome values by name, converted to the types the dynamics use"""

    def __init__(self, c: Chromosome):
        v = c.values
        self.age_min_child = int(v[0])
        self.age_max_child = int(v[1])
        self.nb_child = int(v[2])
        self.prob_couple = float(v[3])
        self.nb_join_trials = int(v[4])
        self.splitting_proba = float(v[5])
        self.prob_accept_residence = float(v[6])
        self.res_margin = int(v[7])
        self.prob_study_outside = float(v[8])
        self.prob_regional_jobs = float(v[9])
        self.job_vacancy_rate = float(v[10])


def birth_probability(age_min: int, age_max: int, nb_child: int) -> float:
    """
    Yearly birth probability of a fertile couple.

    Spread evenly over the fertile window so a couple that stays together
    through all (age_max - age_min + 1) fertile years has nb_child children in
    expectation; capped at 1 for windows shorter than nb_child years.
    """
    window = age_max - age_min + 1
    if window <= 0:
        return 0.0
    return min(1.0, nb_child / window)


def death_hazard(age: int, mortality_scale: float = 1.0) -> float:
    starts = [a for a, _ in config.DEATH_HAZARD]
    band = bisect.bisect_right(starts, age) - 1
    return min(1.0, config.DEATH_HAZARD[max(band, 0)][1] * mortality_scale)


def step_year(world: WorldState, params: Chromosome, rng: np.random.Generator, cfg: SimConfig = None) -> WorldState:
    """Advance the world by one year in place and return it"""
    cfg = cfg or SimConfig()
    p = _Params(params)
    world.reset_events()

    _aging(world)
    _deaths(world, cfg, rng)
    _births(world, p, rng)
    _couple_formation(world, p, rng)
    _household_splitting(world, p, rng)
    _residence_change(world, p, rng)
    _education_migration(world, p, cfg, rng)
    _labor_market(world, p, cfg, rng)

    world.year += 1
    if logger.isEnabledFor(logging.DEBUG):
        problems = check_integrity(world)
        if problems:
            logger.debug(f"Integrity problems after {world.year}: {problems[:5]}")
    return world


def _aging(world: WorldState):
    for person in world.individuals.values():
        person.age = min(person.age + 1, config.MAX_AGE)


def _deaths(world: WorldState, cfg: SimConfig, rng: np.random.Generator):
    if cfg.mortality_scale <= 0:
        return
    for pid in sorted(world.individuals):
        person = world.individuals[pid]
        if rng.random() < death_hazard(person.age, cfg.mortality_scale):
            world.events[person.residence].deaths += 1
            _remove_individual(world, person)


def _births(world: WorldState, p: _Params, rng: np.random.Generator):
    probability = birth_probability(p.age_min_child, p.age_max_child, p.nb_child)
    if probability <= 0:
        return
    mothers = [person for pid, person in sorted(world.individuals.items())
               if person.sex is Sex.B and person.partner_id is not None
               and p.age_min_child <= person.age <= p.age_max_child]
    for mother in mothers:
        if rng.random() < probability:
            household = world.households[mother.household_id]
            sex = Sex.A if rng.random() < 0.5 else Sex.B
            child = _add_member(world, household, 0, sex)
            child.activity = Activity.STUDENT
            world.events[household.municipality].births += 1


def _couple_formation(world: WorldState, p: _Params, rng: np.random.Generator):
    """
    Each single adult makes up to nbJoinTrials attempts, each with a random
    single of the other sex from another household, accepted with
    probabilityToMakeCouple.

    The attempts are independent of which candidate is drawn, so the outcome
    is drawn once: success with 1 - (1 - p)^trials, then a uniform candidate.
    """
    if p.prob_couple <= 0 or p.nb_join_trials <= 0:
        return
    success = 1.0 - (1.0 - p.prob_couple) ** p.nb_join_trials
    singles = {Sex.A: [], Sex.B: []}
    for pid, person in sorted(world.individuals.items()):
        if person.partner_id is None and person.age >= config.ADULT_AGE:
            singles[person.sex].append(pid)
    position = {pid: i for pool in singles.values() for i, pid in enumerate(pool)}

    def take(pool: List[int], pid: int):
        i = position.pop(pid)
        last = pool.pop()
        if last != pid:
            pool[i] = last
            position[last] = i

    for pid in sorted(world.individuals):
        if pid not in position:
            continue
        person = world.individuals[pid]
        other_sex = Sex.B if person.sex is Sex.A else Sex.A
        others = singles[other_sex]
        housemates = {m for m in world.households[person.household_id].member_ids
                      if m in position and world.individuals[m].sex is other_sex}
        if len(others) <= len(housemates) or rng.random() >= success:
            continue
        partner_id = others[int(rng.integers(len(others)))]
        while partner_id in housemates:
            partner_id = others[int(rng.integers(len(others)))]
        partner = world.individuals[partner_id]
        take(singles[person.sex], person.id)
        take(others, partner.id)
        person.partner_id, partner.partner_id = partner.id, person.id
        _merge_households(world, person, partner)


def _merge_households(world: WorldState, host: Individual, joiner: Individual):
    """Joiner moves into the host's household, bringing dependents if they were the only adult"""
    if host.household_id == joiner.household_id:
        return
    source = world.households[joiner.household_id]
    target = world.households[host.household_id]
    adults = [m for m in source.member_ids if world.individuals[m].age >= config.ADULT_AGE]
    moving = [joiner.id]
    if adults == [joiner.id]:
        moving += [m for m in source.member_ids if m != joiner.id]
    for mid in moving:
        _move_member(world, world.individuals[mid], source, target)


def _household_splitting(world: WorldState, p: _Params, rng: np.random.Generator):
    """Divorce and children leaving home, as one mechanism"""
    if p.splitting_proba <= 0:
        return
    for hid in sorted(world.households):
        household = world.households.get(hid)
        if household is None or len(household.member_ids) < 2:
            continue
        if rng.random() >= p.splitting_proba:
            continue
        leaver = _choose_leaver(world, household, rng)
        if leaver is None:
            continue
        if leaver.partner_id is not None:
            world.individuals[leaver.partner_id].partner_id = None
            leaver.partner_id = None
        municipality = world.municipalities[household.municipality]
        new_household = Household(id=world.new_household_id(), member_ids=set(),
                                  municipality=municipality.id, rooms=_take_dwelling(municipality, 1))
        world.households[new_household.id] = new_household
        _move_member(world, leaver, household, new_household)


def _choose_leaver(world: WorldState, household: Household, rng: np.random.Generator) -> Optional[Individual]:
    members = sorted(household.member_ids)
    partnered = [m for m in members if world.individuals[m].partner_id in household.member_ids]
    if partnered:
        return world.individuals[partnered[int(rng.integers(len(partnered)))]]
    adults = [m for m in members if world.individuals[m].age >= config.ADULT_AGE]
    if len(adults) < 2:
        return None
    eldest = max(adults, key=lambda m: (world.individuals[m].age, -m))
    others = [m for m in adults if m != eldest]
    return world.individuals[others[int(rng.integers(len(others)))]]


def _residence_change(world: WorldState, p: _Params, rng: np.random.Generator):
    """Households whose room count misses their size by more than the margin look for a better dwelling"""
    if p.prob_accept_residence <= 0:
        return
    for hid in sorted(world.households):
        household = world.households[hid]
        needed = len(household.member_ids)
        if abs(household.rooms - needed) <= p.res_margin:
            continue
        candidates = [(m.id, i) for m in world.municipalities.values()
                      for i, rooms in enumerate(m.vacant_dwellings) if abs(rooms - needed) <= p.res_margin]
        if not candidates:
            continue
        if rng.random() >= p.prob_accept_residence:
            continue
        target_id, index = candidates[int(rng.integers(len(candidates)))]
        _move_household(world, household, target_id, world.municipalities[target_id].vacant_dwellings.pop(index))


def _education_migration(world: WorldState, p: _Params, cfg: SimConfig, rng: np.random.Generator):
    """Students reaching higher-education age study outside the region or enter the labor market"""
    leavers = []
    for pid, person in sorted(world.individuals.items()):
        if person.activity is not Activity.STUDENT or person.age < cfg.higher_education_age:
            continue
        if p.prob_study_outside > 0 and rng.random() < p.prob_study_outside:
            leavers.append(person)
        else:
            person.activity = Activity.UNEMPLOYED
    for person in leavers:
        world.events[person.residence].out_migrations += 1
        _remove_individual(world, person)


def _labor_market(world: WorldState, p: _Params, cfg: SimConfig, rng: np.random.Generator):
    """
    Retirement and separations, job creation, then hiring. Workers laid off
    this year only search from the next year on.

    Each year jobVacancyRate new positions are opened per occupied position
    (per municipality and sector). Open positions are taken, in this order,
    by the unemployed, by inactive working-age adults entering the labor
    market (each with probability jobVacancyRate) and by workers changing
    jobs (each with probability jobVacancyRate) who take an open position
    anywhere in the region. A worker whose new workplace lies in another
    municipality moves there with their household with probability
    cfg.job_relocation_probability.
    """
    laid_off = set()
    for pid, person in sorted(world.individuals.items()):
        if person.age >= cfg.retirement_age and person.activity is not Activity.RETIRED:
            person.leave_job(Activity.RETIRED)
        elif person.activity is Activity.WORKER and rng.random() < cfg.job_separation_rate:
            person.leave_job(Activity.UNEMPLOYED)
            laid_off.add(pid)

    occupied = world.occupied_jobs()
    if p.job_vacancy_rate > 0:
        for mid in sorted(world.municipalities):
            municipality = world.municipalities[mid]
            for sector, used in enumerate(occupied[mid]):
                expected = used * p.job_vacancy_rate
                created = int(expected) + (1 if rng.random() < expected - int(expected) else 0)
                municipality.job_slots[sector] += created

    workers = [person for pid, person in sorted(world.individuals.items()) if person.activity is Activity.WORKER]
    # Workers laid off this year start searching next year
    seekers = [person for pid, person in sorted(world.individuals.items())
               if person.activity is Activity.UNEMPLOYED and pid not in laid_off]
    for index in rng.permutation(len(seekers)):
        _hire(world, seekers[int(index)], occupied, p, rng)
    if p.job_vacancy_rate <= 0:
        return

    entrants = [person for pid, person in sorted(world.individuals.items())
                if person.activity is Activity.INACTIVE and config.ADULT_AGE <= person.age < cfg.retirement_age]
    for person in entrants:
        if rng.random() < p.job_vacancy_rate:
            _hire(world, person, occupied, p, rng)

    for index in rng.permutation(len(workers)):
        person = workers[int(index)]
        if rng.random() < p.job_vacancy_rate:
            _change_job(world, person, occupied, cfg, rng)


def _hire(world: WorldState, person: Individual, occupied: Dict[int, List[int]], p: _Params,
          rng: np.random.Generator):
    """Local open position first; other municipalities with probability probLookingRegionalJobs"""
    sector = _vacant_sector(world.municipalities[person.residence], occupied[person.residence], rng)
    workplace = person.residence
    if sector is None and p.prob_regional_jobs > 0 and rng.random() < p.prob_regional_jobs:
        for other in rng.permutation(sorted(world.municipalities)):
            other = int(other)
            if other == person.residence:
                continue
            sector = _vacant_sector(world.municipalities[other], occupied[other], rng)
            if sector is not None:
                workplace = other
                break
    if sector is not None:
        person.employ(sector, workplace)
        occupied[workplace][sector] += 1


def _change_job(world: WorldState, person: Individual, occupied: Dict[int, List[int]], cfg: SimConfig,
                rng: np.random.Generator):
    """Move a worker to an open position drawn over the whole region"""
    hiring = [mid for mid in sorted(world.municipalities)
              if any(used < slots for used, slots in zip(occupied[mid], world.municipalities[mid].job_slots))]
    if not hiring:
        return
    workplace = hiring[int(rng.integers(len(hiring)))]
    sector = _vacant_sector(world.municipalities[workplace], occupied[workplace], rng)
    if (workplace, sector) == (person.workplace, person.sector):
        return
    occupied[person.workplace][person.sector] -= 1
    occupied[workplace][sector] += 1
    person.employ(sector, workplace)
    if workplace != person.residence and rng.random() < cfg.job_relocation_probability:
        household = world.households[person.household_id]
        target = world.municipalities[workplace]
        _move_household(world, household, workplace, _take_dwelling(target, len(household.member_ids)))


def _vacant_sector(municipality: Municipality, occupied: List[int], rng: np.random.Generator) -> Optional[int]:
    open_sectors = [s for s, slots in enumerate(municipality.job_slots) if occupied[s] < slots]
    if not open_sectors:
        return None
    return open_sectors[int(rng.integers(len(open_sectors)))]


# ==============================
# MEMBERSHIP BOOKKEEPING
# ==============================
def _take_dwelling(municipality: Municipality, needed: int) -> int:
    """Smallest vacant dwelling with at least `needed` rooms; new construction when none is free"""
    fitting = [i for i, rooms in enumerate(municipality.vacant_dwellings) if rooms >= needed]
    if not fitting:
        return needed
    best = min(fitting, key=lambda i: (municipality.vacant_dwellings[i], i))
    return municipality.vacant_dwellings.pop(best)


def _move_household(world: WorldState, household: Household, target_id: int, rooms: int):
    """The whole household moves into a dwelling of `rooms` rooms in target_id; the old dwelling is freed"""
    world.municipalities[household.municipality].vacant_dwellings.append(household.rooms)
    if target_id != household.municipality:
        world.events[household.municipality].moves_out += len(household.member_ids)
    household.rooms = rooms
    household.municipality = target_id
    for mid in household.member_ids:
        world.individuals[mid].residence = target_id


def _move_member(world: WorldState, person: Individual, source: Household, target: Household):
    source.member_ids.discard(person.id)
    target.member_ids.add(person.id)
    person.household_id = target.id
    if person.residence != target.municipality:
        world.events[person.residence].moves_out += 1
        person.residence = target.municipality
    if not source.member_ids:
        _dissolve_household(world, source)


def _remove_individual(world: WorldState, person: Individual):
    if person.partner_id is not None and person.partner_id in world.individuals:
        world.individuals[person.partner_id].partner_id = None
    household = world.households[person.household_id]
    household.member_ids.discard(person.id)
    del world.individuals[person.id]
    if not household.member_ids:
        _dissolve_household(world, household)


def _dissolve_household(world: WorldState, household: Household):
    world.municipalities[household.municipality].vacant_dwellings.append(household.rooms)
    del world.households[household.id]


# ==============================
# INTEGRITY
# ==============================
def check_integrity(world: WorldState) -> List[str]:
    problems = []
    for person in world.individuals.values():
        household = world.households.get(person.household_id)
        if household is None or person.id not in household.member_ids:
            problems.append(f"individual {person.id}: household {person.household_id} does not list it")
        elif person.residence != household.municipality:
            problems.append(f"individual {person.id}: lives in {person.residence}, household in {household.municipality}")
        if (person.activity is Activity.WORKER) != (person.sector is not None and person.workplace is not None):
            problems.append(f"individual {person.id}: activity {person.activity.value} with sector {person.sector}")
        if person.workplace is not None and person.workplace not in world.municipalities:
            problems.append(f"individual {person.id}: unknown workplace {person.workplace}")
        if not 0 <= person.age <= config.MAX_AGE:
            problems.append(f"individual {person.id}: age {person.age} out of range")
        if person.partner_id is not None:
            partner = world.individuals.get(person.partner_id)
            if partner is None or partner.partner_id != person.id:
                problems.append(f"individual {person.id}: partner link to {person.partner_id} is not mutual")
    for household in world.households.values():
        if not household.member_ids:
            problems.append(f"household {household.id}: empty")
        if household.municipality not in world.municipalities:
            problems.append(f"household {household.id}: unknown municipality {household.municipality}")
        for mid in household.member_ids:
            if mid not in world.individuals:
                problems.append(f"household {household.id}: unknown member {mid}")
    occupied = world.occupied_jobs()
    for mid, municipality in world.municipalities.items():
        for sector, (used, slots) in enumerate(zip(occupied[mid], municipality.job_slots)):
            if used > slots:
                problems.append(f"municipality {mid} sector {sector}: {used} workers for {slots} positions")
    return problems


# ==============================
# INDICATORS
# ==============================
def age_bin_labels(edges: List[int]) -> List[str]:
    labels = [f"{lo}-{hi - 1}" for lo, hi in zip(edges, edges[1:])]
    labels.append(f"{edges[-1]}+")
    return labels


def age_bin(age: int, edges: List[int]) -> int:
    return bisect.bisect_right(edges, age) - 1


HOUSEHOLD_SIZE_LABELS = ["1", "2", "3", "4+"]


def extract_indicators(world: WorldState, age_bin_edges: List[int] = None, year: int = None) -> IndicatorSeries:
    """The eight indicators of the world for one year (defaults to world.year)"""
    edges = age_bin_edges or config.AGE_BIN_EDGES
    labels = age_bin_labels(edges)
    year = world.year if year is None else year
    municipality_ids = sorted(world.municipalities)
    sectors = max((len(m.job_slots) for m in world.municipalities.values()), default=0)
    districts = sorted({m.district_id for m in world.municipalities.values()})
    series = IndicatorSeries()

    age_counts = {m: [0] * len(labels) for m in municipality_ids}
    employed = {m: [0] * len(labels) for m in municipality_ids}
    unemployed = {m: [0] * len(labels) for m in municipality_ids}
    working_in = Counter()
    sector_counts = {d: [0] * sectors for d in districts}
    for person in world.individuals.values():
        b = age_bin(person.age, edges)
        age_counts[person.residence][b] += 1
        if person.activity is Activity.WORKER:
            employed[person.residence][b] += 1
            working_in[person.workplace] += 1
            sector_counts[world.municipalities[person.residence].district_id][person.sector] += 1
        elif person.activity is Activity.UNEMPLOYED:
            unemployed[person.residence][b] += 1

    for m in municipality_ids:
        events = world.events.get(m, EventCounts())
        for b, label in enumerate(labels):
            series[IndicatorKey.of(Indicator.AGE_STRUCTURE, m, year, label)] = age_counts[m][b]
            series[IndicatorKey.of(Indicator.EMPLOYMENT, m, year, label)] = employed[m][b]
            series[IndicatorKey.of(Indicator.UNEMPLOYMENT, m, year, label)] = unemployed[m][b]
        series[IndicatorKey.of(Indicator.BIRTHS_DEATHS, m, year, "births")] = events.births
        series[IndicatorKey.of(Indicator.BIRTHS_DEATHS, m, year, "deaths")] = events.deaths
        series[IndicatorKey.of(Indicator.OUT_MIGRATION, m, year)] = events.out_migrations + events.moves_out
        series[IndicatorKey.of(Indicator.WORKPLACE, m, year)] = working_in[m]

    size_counts = {d: [0] * len(HOUSEHOLD_SIZE_LABELS) for d in districts}
    for household in world.households.values():
        district = world.municipalities[household.municipality].district_id
        size_counts[district][min(len(household.member_ids), 4) - 1] += 1
    for d in districts:
        total = sum(size_counts[d])
        for i, label in enumerate(HOUSEHOLD_SIZE_LABELS):
            share = 100.0 * size_counts[d][i] / total if total else 0.0
            series[IndicatorKey.of(Indicator.HOUSEHOLD_STRUCTURE, d, year, label)] = share
        workers = sum(sector_counts[d])
        for s in range(sectors):
            share = 100.0 * sector_counts[d][s] / workers if workers else 0.0
            series[IndicatorKey.of(Indicator.SECTOR_OF_ACTIVITY, d, year, f"sector{s}")] = share
    return series


# ==============================
# FULL RUN
# ==============================
def run(cfg: SimConfig, params: Chromosome, rng: np.random.Generator) -> IndicatorSeries:
    """init_world then cfg.steps yearly steps; indicators for every simulated year"""
    world = init_world(cfg, rng)
    series = IndicatorSeries()
    for _ in range(cfg.steps):
        step_year(world, params, rng, cfg)
        series.update(extract_indicators(world, cfg.age_bin_edges))
    return series


def run_world(cfg: SimConfig, params: Chromosome, rng: np.random.Generator) -> WorldState:
    """Same as run but returns the final world (snapshots, debugging)"""
    world = init_world(cfg, rng)
    for _ in range(cfg.steps):
        step_year(world, params, rng, cfg)
    return world


def dump_world(world: WorldState, path: str):
    """
    One JSON record per line and individual, columns:
    id, age, sex, activity, sector, residence, workplace, household, partner
    """
    with open(path, "w", encoding="utf-8") as f:
        for pid in sorted(world.individuals):
            person = world.individuals[pid]
            f.write(json.dumps({
                "id": person.id,
                "age": person.age,
                "sex": person.sex.value,
                "activity": person.activity.value,
                "sector": person.sector,
                "residence": person.residence,
                "workplace": person.workplace,
                "household": person.household_id,
                "partner": person.partner_id,
            }) + "\n")
