//! Predicate and class names the engine itself interprets. Everything else in
//! a graph is opaque data that only rules give meaning to.

pub const TYPE: &str = "type";
pub const LABEL: &str = "label";

pub const INSTANCE_OF: &str = "instanceOf";
pub const PART_OF: &str = "partOf";
pub const PERFORMED_BY: &str = "performedBy";
pub const CAN_BE_EXECUTED_BY: &str = "canBeExecutedBy";
pub const HAS_ROLE: &str = "hasRole";
pub const BUSY: &str = "busy";

pub const HAS_APPLICATION_TYPE: &str = "hasApplicationType";
pub const HAS_LOAN_GOAL: &str = "hasLoanGoal";
pub const REQUESTED_AMOUNT: &str = "requestedAmount";

pub const SENIORITY: &str = "seniority";
pub const EXPERT_FOR: &str = "expertFor";

pub const ENABLED_AT: &str = "enabledAt";
pub const STARTED_AT: &str = "startedAt";
pub const COMPLETED_AT: &str = "completedAt";
pub const DIRECTLY_FOLLOWED_BY: &str = "directlyFollowedBy";
pub const COMPLETED_TASKS: &str = "completedTasks";
pub const EXPERIENCED_IN: &str = "experiencedIn";

pub const CLASS_TASK: &str = "Task";
pub const CLASS_CASE: &str = "Case";
pub const CLASS_RESOURCE: &str = "Resource";
pub const CLASS_ROLE: &str = "Role";
pub const CLASS_ACTIVITY: &str = "Activity";
