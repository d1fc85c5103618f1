import pytest

from dualmatch.embeddings import ProviderPair
from dualmatch.metrics import FeatureComputer
from dualmatch.ontology import ClassRecord, GroundTruth, MatchTask, OntologySchema


def make_class(iri, name, label="", comment="", superclasses=(), subclasses=(), properties=()):
    return ClassRecord(
        iri=iri,
        name=name,
        label=label,
        comment=comment,
        superclasses=frozenset(superclasses),
        subclasses=frozenset(subclasses),
        properties=frozenset(properties),
    )


@pytest.fixture
def providers():
    return ProviderPair.builtin()


@pytest.fixture
def computer(providers):
    return FeatureComputer(providers)


@pytest.fixture
def toy_task():
    source = OntologySchema(
        "src",
        [
            make_class("s#Paper", "Paper", label="paper", comment="a written contribution"),
            make_class("s#Person", "Person", label="person"),
            make_class("s#ProgramCommittee", "ProgramCommittee", label="program committee"),
            make_class("s#Review", "Review", comment="evaluation of a paper"),
        ],
    )
    target = OntologySchema(
        "tgt",
        [
            make_class("t#Paper", "Paper", label="paper", comment="a written contribution"),
            make_class("t#Human", "Human", label="person"),
            make_class("t#PC", "ProgramCommittee"),
            make_class("t#Assessment", "Assessment", comment="evaluation of a paper"),
            make_class("t#Venue", "Venue", label="venue"),
        ],
    )
    truth = GroundTruth(
        pairs=frozenset(
            {("s#Paper", "t#Paper"), ("s#Person", "t#Human"), ("s#ProgramCommittee", "t#PC")}
        )
    )
    return MatchTask(source=source, target=target, truth=truth)
