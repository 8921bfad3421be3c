//! Namespace constants for the vocabularies the runtime understands.

macro_rules! namespace {
    ($modname:ident, $ns:literal, { $($fn_name:ident / $const_name:ident = $local:literal),* $(,)? }) => {
        pub mod $modname {
            use crate::term::Iri;
            pub const NS: &str = $ns;
            $(
                pub const $const_name: &str = concat!($ns, $local);
                pub fn $fn_name() -> Iri {
                    Iri::from_static($const_name)
                }
            )*
        }
    };
}

namespace!(rdf, "http://www.w3.org/1999/02/22-rdf-syntax-ns#", {
    type_ / TYPE = "type",
    lang_string / LANG_STRING = "langString",
});

namespace!(rdfs, "http://www.w3.org/2000/01/rdf-schema#", {
    sub_class_of / SUB_CLASS_OF = "subClassOf",
    domain / DOMAIN = "domain",
    range / RANGE = "range",
    class / CLASS = "Class",
    label / LABEL = "label",
    comment / COMMENT = "comment",
    literal / LITERAL = "Literal",
});

namespace!(xsd, "http://www.w3.org/2001/XMLSchema#", {
    string / STRING = "string",
    integer / INTEGER = "integer",
    decimal / DECIMAL = "decimal",
    double / DOUBLE = "double",
    float / FLOAT = "float",
    boolean / BOOLEAN = "boolean",
    date_time / DATE_TIME = "dateTime",
    any_uri / ANY_URI = "anyURI",
    non_negative_integer / NON_NEGATIVE_INTEGER = "nonNegativeInteger",
});

namespace!(owl, "http://www.w3.org/2002/07/owl#", {
    class / CLASS = "Class",
    object_property / OBJECT_PROPERTY = "ObjectProperty",
    datatype_property / DATATYPE_PROPERTY = "DatatypeProperty",
    functional_property / FUNCTIONAL_PROPERTY = "FunctionalProperty",
    restriction / RESTRICTION = "Restriction",
    on_property / ON_PROPERTY = "onProperty",
    max_cardinality / MAX_CARDINALITY = "maxCardinality",
    min_cardinality / MIN_CARDINALITY = "minCardinality",
    cardinality / CARDINALITY = "cardinality",
    max_qualified_cardinality / MAX_QUALIFIED_CARDINALITY = "maxQualifiedCardinality",
    min_qualified_cardinality / MIN_QUALIFIED_CARDINALITY = "minQualifiedCardinality",
    qualified_cardinality / QUALIFIED_CARDINALITY = "qualifiedCardinality",
    all_values_from / ALL_VALUES_FROM = "allValuesFrom",
    inverse_of / INVERSE_OF = "inverseOf",
    named_individual / NAMED_INDIVIDUAL = "NamedIndividual",
    ontology / ONTOLOGY = "Ontology",
});

namespace!(sh, "http://www.w3.org/ns/shacl#", {
    node_shape / NODE_SHAPE = "NodeShape",
    property_shape / PROPERTY_SHAPE = "PropertyShape",
    target_class / TARGET_CLASS = "targetClass",
    property / PROPERTY = "property",
    path / PATH = "path",
    max_count / MAX_COUNT = "maxCount",
    min_count / MIN_COUNT = "minCount",
    datatype / DATATYPE = "datatype",
    class / CLASS = "class",
    node_kind / NODE_KIND = "nodeKind",
    message / MESSAGE = "message",
    severity / SEVERITY = "severity",
    sparql / SPARQL = "sparql",
    select / SELECT = "select",
    prefixes / PREFIXES = "prefixes",
    declare / DECLARE = "declare",
    prefix / PREFIX = "prefix",
    namespace / NAMESPACE = "namespace",
    name / NAME = "name",
    description / DESCRIPTION = "description",
    deactivated / DEACTIVATED = "deactivated",
    validation_report / VALIDATION_REPORT = "ValidationReport",
    validation_result / VALIDATION_RESULT = "ValidationResult",
    conforms / CONFORMS = "conforms",
    result / RESULT = "result",
    focus_node / FOCUS_NODE = "focusNode",
    result_path / RESULT_PATH = "resultPath",
    value / VALUE = "value",
    source_constraint_component / SOURCE_CONSTRAINT_COMPONENT = "sourceConstraintComponent",
    source_shape / SOURCE_SHAPE = "sourceShape",
    result_severity / RESULT_SEVERITY = "resultSeverity",
    result_message / RESULT_MESSAGE = "resultMessage",
    violation / VIOLATION = "Violation",
    warning / WARNING = "Warning",
    info / INFO = "Info",
    iri / IRI = "IRI",
    blank_node / BLANK_NODE = "BlankNode",
    literal / LITERAL = "Literal",
    blank_node_or_iri / BLANK_NODE_OR_IRI = "BlankNodeOrIRI",
    blank_node_or_literal / BLANK_NODE_OR_LITERAL = "BlankNodeOrLiteral",
    iri_or_literal / IRI_OR_LITERAL = "IRIOrLiteral",
    max_count_component / MAX_COUNT_COMPONENT = "MaxCountConstraintComponent",
    min_count_component / MIN_COUNT_COMPONENT = "MinCountConstraintComponent",
    datatype_component / DATATYPE_COMPONENT = "DatatypeConstraintComponent",
    class_component / CLASS_COMPONENT = "ClassConstraintComponent",
    node_kind_component / NODE_KIND_COMPONENT = "NodeKindConstraintComponent",
    sparql_component / SPARQL_COMPONENT = "SPARQLConstraintComponent",
});

namespace!(prov, "http://www.w3.org/ns/prov#", {
    activity / ACTIVITY = "Activity",
    was_associated_with / WAS_ASSOCIATED_WITH = "wasAssociatedWith",
    ended_at_time / ENDED_AT_TIME = "endedAtTime",
    was_generated_by / WAS_GENERATED_BY = "wasGeneratedBy",
});

namespace!(rdf4j, "http://rdf4j.org/schema/rdf4j#", {
    truncated / TRUNCATED = "truncated",
    shacl_shape_graph / SHACL_SHAPE_GRAPH = "SHACLShapeGraph",
});

namespace!(rdf4j_sh, "http://rdf4j.org/shacl-extensions#", {
    shapes_graph / SHAPES_GRAPH = "shapesGraph",
});

namespace!(cfc, "http://w3id.org/circularfactory/Core#", {
    product / PRODUCT = "Product",
    process / PROCESS = "Process",
    resource / RESOURCE = "Resource",
    operation / OPERATION = "Operation",
    observation / OBSERVATION = "Observation",
});

namespace!(svc, "http://w3id.org/circularfactory/Service#", {
    service / SERVICE = "Service",
    workflow / WORKFLOW = "Workflow",
    parameter / PARAMETER = "Parameter",
    outcome / OUTCOME = "Outcome",
    has_address / HAS_ADDRESS = "hasAddress",
    is_provided_by_resource / IS_PROVIDED_BY_RESOURCE = "isProvidedByResource",
    provides_workflow / PROVIDES_WORKFLOW = "providesWorkflow",
    is_workflow_of / IS_WORKFLOW_OF = "isWorkflowOf",
    has_parameter / HAS_PARAMETER = "hasParameter",
    has_outcome / HAS_OUTCOME = "hasOutcome",
    parameter_name / PARAMETER_NAME = "parameterName",
    parameter_datatype / PARAMETER_DATATYPE = "parameterDatatype",
});

namespace!(fc, "http://w3id.org/circularfactory/FlexConveyor#", {
    flex_conveyor_module / FLEX_CONVEYOR_MODULE = "FlexConveyorModule",
    module_service / MODULE_SERVICE = "ModuleControlService",
    wms_service / WMS_SERVICE = "WarehouseManagementService",
    box_ / BOX = "Box",
    box_state / BOX_STATE = "BoxState",
    created / CREATED = "Created",
    in_transit / IN_TRANSIT = "InTransit",
    delivered / DELIVERED = "Delivered",
    state_created / STATE_CREATED = "StateCreated",
    state_in_transit / STATE_IN_TRANSIT = "StateInTransit",
    state_delivered / STATE_DELIVERED = "StateDelivered",
    has_state / HAS_STATE = "hasState",
    has_possession / HAS_POSSESSION = "hasPossession",
    is_possessed_by / IS_POSSESSED_BY = "isPossessedBy",
    has_origin / HAS_ORIGIN = "hasOrigin",
    has_destination / HAS_DESTINATION = "hasDestination",
    has_grid_x / HAS_GRID_X = "hasGridX",
    has_grid_y / HAS_GRID_Y = "hasGridY",
    has_north_neighbor / HAS_NORTH_NEIGHBOR = "hasNorthNeighbor",
    has_east_neighbor / HAS_EAST_NEIGHBOR = "hasEastNeighbor",
    has_south_neighbor / HAS_SOUTH_NEIGHBOR = "hasSouthNeighbor",
    has_west_neighbor / HAS_WEST_NEIGHBOR = "hasWestNeighbor",
    convey_workflow / CONVEY_WORKFLOW = "ConveyWorkflow",
    reserve_workflow / RESERVE_WORKFLOW = "ReserveWorkflow",
    receive_workflow / RECEIVE_WORKFLOW = "ReceiveWorkflow",
    flex_conveyor_module_shape / FLEX_CONVEYOR_MODULE_SHAPE = "FlexConveyorModuleShape",
    in_transit_box_possessed_shape / IN_TRANSIT_BOX_POSSESSED_SHAPE = "InTransitBoxPossessedShape",
    delivered_box_not_possessed_shape / DELIVERED_BOX_NOT_POSSESSED_SHAPE = "DeliveredBoxNotPossessedShape",
});

namespace!(fci, "http://w3id.org/circularfactory/FlexConveyorInstances#", {
    wms / WMS = "WMS",
});

namespace!(us, "http://w3id.org/circularfactory/Unscrewing#", {
    screw / SCREW = "Screw",
    unscrewing_operation / UNSCREWING_OPERATION = "UnscrewingOperation",
    screwing_resource / SCREWING_RESOURCE = "ScrewingResource",
    time_series_data / TIME_SERIES_DATA = "TimeSeriesData",
    has_screw / HAS_SCREW = "hasScrew",
    has_unscrewing_operation / HAS_UNSCREWING_OPERATION = "hasUnscrewingOperation",
    has_resource / HAS_RESOURCE = "hasResource",
    performed_operation / PERFORMED_OPERATION = "performedOperation",
    has_time_series_data / HAS_TIME_SERIES_DATA = "hasTimeSeriesData",
    has_json_encoded_time_series_data / HAS_JSON_ENCODED_TIME_SERIES_DATA = "hasJSONEncodedTimeSeriesData",
    has_success_status / HAS_SUCCESS_STATUS = "hasSuccessStatus",
    has_anomaly_label / HAS_ANOMALY_LABEL = "hasAnomalyLabel",
    has_timestamp / HAS_TIMESTAMP = "hasTimestamp",
    torque_lower_limit / TORQUE_LOWER_LIMIT = "hasTorqueLowerLimit",
    torque_upper_limit / TORQUE_UPPER_LIMIT = "hasTorqueUpperLimit",
    max_axial_force / MAX_AXIAL_FORCE = "hasMaxAxialForce",
    min_travel / MIN_TRAVEL = "hasMinTravel",
    max_travel / MAX_TRAVEL = "hasMaxTravel",
    torque_uncertainty / TORQUE_UNCERTAINTY = "hasTorqueUncertainty",
    perceive_workflow / PERCEIVE_WORKFLOW = "PerceiveWorkflow",
    classify_workflow / CLASSIFY_WORKFLOW = "ClassifyWorkflow",
    learn_workflow / LEARN_WORKFLOW = "LearnWorkflow",
    analysis_service / ANALYSIS_SERVICE = "AnalysisService",
});

namespace!(usi, "http://w3id.org/circularfactory/UnscrewingInstances#", {
    perception / PERCEPTION = "Perception",
    anomaly_detection / ANOMALY_DETECTION = "AnomalyDetection",
    learning / LEARNING = "Learning",
    screw_type / SCREW_TYPE = "ScrewTypeM4",
    robot / ROBOT = "Robot1",
    analysis_service / ANALYSIS_SERVICE = "AnalysisService",
});

/// Graph holding instance data written through the mapper.
pub const DEFAULT_GRAPH: &str = "urn:kapps:default";
/// Graph holding SHACL shapes.
pub const SHAPES_GRAPH: &str = "urn:kapps:shapes";
/// Graph holding ontology (TBox) statements.
pub const ONTOLOGY_GRAPH: &str = "urn:kapps:ontology";

pub fn default_graph() -> crate::term::Iri {
    crate::term::Iri::from_static(DEFAULT_GRAPH)
}

pub fn shapes_graph() -> crate::term::Iri {
    crate::term::Iri::from_static(SHAPES_GRAPH)
}

pub fn ontology_graph() -> crate::term::Iri {
    crate::term::Iri::from_static(ONTOLOGY_GRAPH)
}

/// Prefixes used when rendering Turtle for humans.
pub fn standard_prefixes() -> Vec<(String, String)> {
    [
        ("rdf", rdf::NS),
        ("rdfs", rdfs::NS),
        ("xsd", xsd::NS),
        ("owl", owl::NS),
        ("sh", sh::NS),
        ("prov", prov::NS),
        ("cfc", cfc::NS),
        ("svc", svc::NS),
        ("fc", fc::NS),
        ("fci", fci::NS),
        ("us", us::NS),
        ("usi", usi::NS),
    ]
    .into_iter()
    .map(|(p, n)| (p.to_owned(), n.to_owned()))
    .collect()
}
