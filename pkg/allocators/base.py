"""
Allocator result types shared by every allocator
"""

from dataclasses import dataclass, field

from infrastructure.event_log import NULL_LOG

TERMINATION_NO_IMPROVEMENT = 'no_improving_pair'
TERMINATION_NO_FEASIBLE = 'no_feasible_user'
TERMINATION_BUDGETS_REACHED = 'budgets_reached'
TERMINATION_PER_USER = 'per_user_assignment'


@dataclass(frozen=True)
class StepRecord:
    ad: int
    node: int
    regret_before: float
    regret_after: float


@dataclass
class AllocatorResult:
    allocation: object
    revenues: list
    log: list = field(default_factory=list)
    termination: str = TERMINATION_NO_IMPROVEMENT
    theta: list = None
    wall_ms: float = 0.0
    collections: list = None

    @property
    def internal_regret(self):
        """Total regret under the allocator's own estimates, after the last step"""
        return self.log[-1].regret_after if self.log else None


def record_step(result, events, ad_id, i, node, before, after, log_steps=False):
    result.log.append(StepRecord(i, int(node), float(before), float(after)))
    if log_steps:
        events.emit('ALLOCATION_STEP', ad=ad_id, node=int(node),
                    regret_before=float(before), regret_after=float(after))


def default_events(events):
    return NULL_LOG if events is None else events
