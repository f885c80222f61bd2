/** The class-agnostic attribute prompt template and its category set.
 *
 * Must render byte-identically to the consumer pipeline's template:
 * "object which has <category-lowercase> is <value>."
 */

export const CATEGORIES = [
  'Color',
  'Shape',
  'Texture',
  'Size',
  'Context',
  'Features',
  'Appearance',
  'Behavior',
  'Environment',
  'Material',
] as const;

export type Category = (typeof CATEGORIES)[number];

const BY_LOWER = new Map(CATEGORIES.map((c) => [c.toLowerCase(), c]));

export function canonicalCategory(raw: string): Category {
  const category = BY_LOWER.get(raw.trim().toLowerCase());
  if (category === undefined) {
    throw new Error(`unknown attribute category ${JSON.stringify(raw)}; expected one of ${CATEGORIES.join(', ')}`);
  }
  return category;
}

export function applyPromptTemplate(category: Category, value: string): string {
  if (!value) {
    throw new Error('attribute value must be non-empty');
  }
  return `object which has ${category.toLowerCase()} is ${value}.`;
}
