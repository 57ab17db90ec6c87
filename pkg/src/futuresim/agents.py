"""Scripted policy agents.

Agents see only their role's FilteredView, so anything they do is legal for
a human in the same seat. Each policy also owns a small set of tail actions:
once per turn, with probability 0.1, one order is swapped for a tail action,
keeping play exploratory rather than purely conservative.
"""
from __future__ import annotations

from .engine import FilteredView
from .model import Order, OrderKind, Phase, Scenario
from .rng import Stream

TAIL_PROBABILITY = 0.1


class AgentPolicy:
    """Base: binds a role to a scenario and handles tail substitution."""

    name = "base"
    parameters: dict = {}

    def __init__(self, scenario: Scenario, role_id: str):
        self.scenario = scenario
        self.role_id = role_id
        self.role = scenario.role(role_id)
        if self.role is None:
            raise ValueError(f"unknown role {role_id!r}")

    # -- helpers -----------------------------------------------------------

    def _entitled(self, kind: OrderKind) -> bool:
        return kind in self.role.entitlements

    def _order(self, kind: OrderKind, tag: str, **fields) -> Order:
        return Order(kind=kind, issuing_role=self.role_id, phase_tag=tag, **fields)

    def _unlockable_techs(self, view: FilteredView) -> list[dict]:
        """Locked techs with all prerequisites unlocked, cheapest remaining first."""
        you = view.you
        unlocked = set(you["unlocked_techs"])
        published_elsewhere = {t for org_id, org in view.orgs.items()
                               if org_id != you["id"] for t in org["published_techs"]}
        out = []
        for node in self.scenario.tech_tree:
            if node.id in unlocked or any(p not in unlocked for p in node.prerequisites):
                continue
            cost = node.research_cost
            if node.id in published_elsewhere:
                cost = max(1, cost - node.publish_discount)
            remaining = max(0, cost - you["research_progress"].get(node.id, 0))
            out.append({"id": node.id, "remaining": remaining, "tier": node.tier})
        out.sort(key=lambda t: (t["remaining"], t["id"]))
        return out

    def _developable_products(self, view: FilteredView) -> list[dict]:
        you = view.you
        unlocked = set(you["unlocked_techs"])
        developed = set(you["developed_products"])
        out = []
        for card in self.scenario.product_deck:
            if card.required_tech in unlocked and card.id not in developed:
                remaining = max(0, card.dev_cost - you["dev_progress"].get(card.id, 0))
                out.append({"id": card.id, "remaining": remaining,
                            "chaos": card.chaos_externality, "revenue": card.revenue})
        out.sort(key=lambda p: (p["remaining"], p["id"]))
        return out

    def _undeployed(self, view: FilteredView) -> list[str]:
        return sorted(set(view.you["developed_products"]) - set(view.you["deployed_products"]))

    def _other_orgs(self, view: FilteredView) -> list[str]:
        return sorted(o for o in view.orgs if o != view.you["id"])

    # -- contract ------------------------------------------------------------

    def decide(self, view: FilteredView, stream: Stream) -> list[Order]:
        """Legal orders for the current phase; empty when there is no move."""
        if view.phase == Phase.PRIVATE_ACTIONS.value:
            orders = self.decide_private(view, stream)
            # tail rule: rolled once per turn, in the private decide
            if stream.random() < TAIL_PROBABILITY:
                tail = self.tail_order(view, stream)
                if tail is not None:
                    if orders:
                        orders[stream.randrange(len(orders))] = tail
                    else:
                        orders = [tail]
            return orders
        if view.phase == Phase.PUBLIC_ACTIONS.value:
            return self.decide_public(view, stream)
        return []

    def decide_private(self, view: FilteredView, stream: Stream) -> list[Order]:
        return []

    def decide_public(self, view: FilteredView, stream: Stream) -> list[Order]:
        return []

    def tail_order(self, view: FilteredView, stream: Stream) -> Order | None:
        return None

    def _tail_espionage(self, view: FilteredView, stream: Stream) -> Order | None:
        if not self._entitled(OrderKind.ESPIONAGE) or view.you["talent_available"] < 1:
            return None
        target = stream.choice(self._other_orgs(view))
        return self._order(OrderKind.ESPIONAGE, "private", target_org=target, talent=1)


class RandomLegal(AgentPolicy):
    """Uniformly messy but always-legal play; the smoke-test baseline."""

    name = "random_legal"

    def decide_private(self, view: FilteredView, stream: Stream) -> list[Order]:
        orders: list[Order] = []
        budget = view.you["talent_available"]
        techs = self._unlockable_techs(view)
        if techs and budget > 0 and stream.random() < 0.8:
            spend = stream.randint(1, budget)
            tech = stream.choice(techs[: min(3, len(techs))])
            orders.append(self._order(OrderKind.ALLOCATE_RESEARCH, "private", tech=tech["id"],
                                      talent=spend, visibility=stream.choice(["private", "public"])))
            budget -= spend
        products = self._developable_products(view)
        if products and budget > 0 and stream.random() < 0.5:
            spend = stream.randint(1, budget)
            product = stream.choice(products[: min(3, len(products))])
            orders.append(self._order(OrderKind.ALLOCATE_DEVELOPMENT, "private",
                                      product=product["id"], talent=spend, visibility="private"))
            budget -= spend
        if budget > 0 and self._entitled(OrderKind.ESPIONAGE) and stream.random() < 0.25:
            orders.append(self._order(OrderKind.ESPIONAGE, "private",
                                      target_org=stream.choice(self._other_orgs(view)), talent=1))
            budget -= 1
        if budget > 0 and stream.random() < 0.25:
            orders.append(self._order(OrderKind.SAFETY_INVESTMENT, "private",
                                      talent=stream.randint(1, budget)))
        return orders

    def decide_public(self, view: FilteredView, stream: Stream) -> list[Order]:
        orders: list[Order] = []
        undeployed = self._undeployed(view)
        if undeployed and stream.random() < 0.7:
            orders.append(self._order(OrderKind.DEPLOY_PRODUCT, "public",
                                      product=stream.choice(undeployed)))
        unpublished = sorted(set(view.you["unlocked_techs"]) - set(view.you["published_techs"]))
        if unpublished and stream.random() < 0.2:
            orders.append(self._order(OrderKind.PUBLISH, "public", tech=stream.choice(unpublished)))
        if (self._entitled(OrderKind.LOBBY) and view.you["funds_available"] >= 5
                and stream.random() < 0.2):
            orders.append(self._order(OrderKind.LOBBY, "public",
                                      target_org=stream.choice(self._other_orgs(view)), funds=5))
        return orders

    def tail_order(self, view: FilteredView, stream: Stream) -> Order | None:
        return self._tail_espionage(view, stream)


class GreedyTech(AgentPolicy):
    """The racing pattern: every point of talent goes to the cheapest next tech."""

    name = "greedy_tech"

    def decide_private(self, view: FilteredView, stream: Stream) -> list[Order]:
        budget = view.you["talent_available"]
        if budget <= 0:
            return []
        techs = self._unlockable_techs(view)
        if techs:
            return [self._order(OrderKind.ALLOCATE_RESEARCH, "private", tech=techs[0]["id"],
                                talent=budget, visibility="private")]
        products = self._developable_products(view)
        if products:
            return [self._order(OrderKind.ALLOCATE_DEVELOPMENT, "private",
                                product=products[0]["id"], talent=budget, visibility="private")]
        return []

    def decide_public(self, view: FilteredView, stream: Stream) -> list[Order]:
        return [self._order(OrderKind.DEPLOY_PRODUCT, "public", product=p)
                for p in self._undeployed(view)]

    def tail_order(self, view: FilteredView, stream: Stream) -> Order | None:
        # low-plausibility for a racer: burn talent spying instead of researching
        return self._tail_espionage(view, stream)


class SafetyCooperator(AgentPolicy):
    """Invests in safety, publishes everything, and seeks collaborations."""

    name = "safety_cooperator"

    def _partner(self, view: FilteredView) -> str | None:
        # stable pairing: orgs sorted, adjacent pairs; odd org out works solo
        orgs = sorted(view.orgs)
        i = orgs.index(view.you["id"])
        j = i + 1 if i % 2 == 0 else i - 1
        return orgs[j] if 0 <= j < len(orgs) else None

    def decide_private(self, view: FilteredView, stream: Stream) -> list[Order]:
        budget = view.you["talent_available"]
        if budget <= 0:
            return []
        orders: list[Order] = []
        techs = self._unlockable_techs(view)
        research_share = (budget + 1) // 2
        if techs and research_share > 0:
            partner = self._partner(view)
            if partner is not None:
                orders.append(self._order(OrderKind.COLLABORATE, "private", partner_org=partner,
                                          tech=techs[0]["id"], talent=research_share))
            else:
                orders.append(self._order(OrderKind.ALLOCATE_RESEARCH, "private",
                                          tech=techs[0]["id"], talent=research_share,
                                          visibility="public"))
            budget -= research_share
        if budget > 0:
            orders.append(self._order(OrderKind.SAFETY_INVESTMENT, "private", talent=budget))
        return orders

    def decide_public(self, view: FilteredView, stream: Stream) -> list[Order]:
        orders = [self._order(OrderKind.PUBLISH, "public", tech=t)
                  for t in sorted(set(view.you["unlocked_techs"]) - set(view.you["published_techs"]))]
        # deploy only stabilizing products
        for product_id in self._undeployed(view):
            if self.scenario.product(product_id).chaos_externality <= 0:
                orders.append(self._order(OrderKind.DEPLOY_PRODUCT, "public", product=product_id))
        return orders

    def tail_order(self, view: FilteredView, stream: Stream) -> Order | None:
        # out of character: a cooperator quietly spying on a partner
        return self._tail_espionage(view, stream)


class AggressiveDefector(AgentPolicy):
    """Espionage, poaching, deploy-everything; never publishes."""

    name = "aggressive_defector"

    def decide_private(self, view: FilteredView, stream: Stream) -> list[Order]:
        orders: list[Order] = []
        budget = view.you["talent_available"]
        others = self._other_orgs(view)
        if self._entitled(OrderKind.ESPIONAGE) and budget >= 3:
            target = others[(view.turn + len(self.role_id)) % len(others)]
            orders.append(self._order(OrderKind.ESPIONAGE, "private", target_org=target, talent=2))
            budget -= 2
        products = self._developable_products(view)
        if products and budget > 0:
            spend = min(3, budget)
            orders.append(self._order(OrderKind.ALLOCATE_DEVELOPMENT, "private",
                                      product=products[0]["id"], talent=spend, visibility="private"))
            budget -= spend
        techs = self._unlockable_techs(view)
        if techs and budget > 0:
            orders.append(self._order(OrderKind.ALLOCATE_RESEARCH, "private", tech=techs[0]["id"],
                                      talent=budget, visibility="private"))
        return orders

    def decide_public(self, view: FilteredView, stream: Stream) -> list[Order]:
        orders = [self._order(OrderKind.DEPLOY_PRODUCT, "public", product=p)
                  for p in self._undeployed(view)]
        if self._entitled(OrderKind.POACH_TALENT) and view.you["funds_available"] >= 4:
            others = self._other_orgs(view)
            target = others[view.turn % len(others)]
            orders.append(self._order(OrderKind.POACH_TALENT, "public", target_org=target,
                                      amount=2, funds_offered=4))
        return orders

    def tail_order(self, view: FilteredView, stream: Stream) -> Order | None:
        # out of character: a defector funding public safety work
        if view.you["talent_available"] < 1:
            return None
        return self._order(OrderKind.SAFETY_INVESTMENT, "private", talent=1)


POLICIES: dict[str, type[AgentPolicy]] = {
    cls.name: cls for cls in (RandomLegal, GreedyTech, SafetyCooperator, AggressiveDefector)
}


def policy_catalog() -> list[type[AgentPolicy]]:
    return [RandomLegal, GreedyTech, SafetyCooperator, AggressiveDefector]


def make_policy(name: str, scenario: Scenario, role_id: str) -> AgentPolicy:
    if name not in POLICIES:
        raise ValueError(f"unknown policy {name!r}; available: {sorted(POLICIES)}")
    return POLICIES[name](scenario, role_id)
