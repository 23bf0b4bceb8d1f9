export { CoverageLog } from "./coverageLog.js";
export {
  DB_PATH_ENV_VAR,
  DEFAULT_DB_NAME,
  DbCorruptError,
  MAGIC,
  decodeDatabase,
  emptyDatabase,
  encodeDatabase,
  mergeCounts,
  readDatabase,
  writeDatabaseAtomic,
} from "./format.js";
export type { Database, GoalMeta } from "./format.js";
