#include "lexicon.hpp"

#include <cctype>

namespace lusd::lexicon {

namespace {

WordSet parse(std::string_view text) {
    WordSet out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) out.insert(text.substr(i, j - i));
        i = j;
    }
    return out;
}

std::unordered_map<std::string_view, std::string_view> parse_pairs(std::string_view text) {
    std::unordered_map<std::string_view, std::string_view> out;
    std::size_t i = 0;
    std::string_view first;
    bool have_first = false;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            const std::string_view w = text.substr(i, j - i);
            if (have_first) {
                out.emplace(first, w);
            } else {
                first = w;
            }
            have_first = !have_first;
        }
        i = j;
    }
    return out;
}

constexpr std::string_view kArticles = "a an the";

constexpr std::string_view kPrepositions = R"(
about above across after against along amid among around as at atop before behind below beneath beside
besides between beyond by despite down during except for from in inside into like near next of off on
onto opposite out outside over past per round since than through throughout till to toward towards under
underneath unlike until up upon via with within without)";

constexpr std::string_view kPronouns = R"(
i me my mine myself you your yours yourself yourselves he him his himself she her hers herself it its
itself we us our ours ourselves they them their theirs themselves who whom whose which what that this
these those someone somebody something anyone anybody anything everyone everybody everything noone
nobody nothing one ones another other others each either neither)";

constexpr std::string_view kFunctionWords = R"(
and or but nor so yet both if then else when while where whereas because although though whether
some any many much more most few fewer less least several all every no not only just very too also
is are was were be been being am do does did done have has had having will would shall should can
could may might must ought there here
zero two three four five six seven eight nine ten eleven twelve twenty thirty hundred thousand
first second third fourth fifth last next half double single pair couple dozen)";

constexpr std::string_view kNouns = R"(
man woman men women person people child children kid kids boy girl baby toddler teenager adult
lady gentleman guy gal family mother father mom dad parent brother sister son daughter friend
couple bride groom king queen prince princess knight wizard witch pirate soldier warrior ninja
samurai monk priest nun chef cook baker farmer fisherman doctor nurse teacher student artist painter
musician singer dancer player athlete runner skier surfer skateboarder cyclist rider driver pilot
astronaut sailor captain police policeman officer firefighter worker builder cowboy clown robot
cyborg alien zombie vampire ghost angel demon god goddess hero superhero villain statue sculpture
mannequin doll puppet figure face head hair beard mustache moustache eye eyes ear nose mouth lip
lips tooth teeth tongue cheek chin neck shoulder arm hand finger thumb leg knee foot feet toe body
skin back chest belly heart smile tear tears wrinkle freckle tattoo makeup lipstick

animal pet dog puppy cat kitten kitty horse pony foal cow bull calf ox pig piglet sheep lamb goat
donkey mule camel llama alpaca deer reindeer moose elk buffalo bison zebra giraffe elephant rhino
rhinoceros hippo hippopotamus lion lioness tiger leopard cheetah panther jaguar cougar lynx wolf fox
coyote bear panda koala kangaroo monkey ape gorilla chimpanzee orangutan baboon lemur sloth raccoon
squirrel chipmunk rabbit bunny hare mouse mice rat hamster guinea ferret otter beaver hedgehog
porcupine skunk badger mole bat bird birds parrot eagle hawk falcon owl crow raven pigeon dove
sparrow robin seagull gull duck duckling goose swan chicken hen rooster chick turkey peacock
flamingo penguin ostrich pelican stork heron crane hummingbird woodpecker fish goldfish shark whale
dolphin seal walrus octopus squid jellyfish crab lobster shrimp starfish turtle tortoise frog toad
snake lizard gecko iguana crocodile alligator dinosaur dragon unicorn phoenix griffin mermaid
butterfly moth bee wasp ant spider fly mosquito ladybug beetle caterpillar worm snail slug
dragonfly grasshopper cricket scorpion minion pikachu

apple banana orange lemon lime grape grapes cherry cherries strawberry blueberry raspberry
watermelon melon peach pear plum mango pineapple kiwi coconut avocado tomato potato carrot onion
garlic pepper cucumber lettuce cabbage broccoli corn pumpkin mushroom bean beans pea peas olive
food meal breakfast lunch dinner snack bread toast sandwich burger hamburger hotdog pizza pasta
spaghetti noodle noodles rice soup salad steak meat chicken bacon sausage ham egg eggs cheese butter
cake cupcake cookie cookies pie donut doughnut muffin croissant bagel pancake waffle chocolate candy
dessert sushi taco burrito fries popcorn cereal yogurt honey jam sauce ketchup icecream cream
topping toppings sprinkles frosting coffee tea matcha latte espresso cappuccino milk juice water
wine beer soda lemonade cocktail drink smoothie

cup mug glass bottle jar bowl plate dish pot pan kettle teapot spoon fork knife chopsticks tray
napkin tablecloth straw lid can box bag basket bucket barrel crate package parcel envelope

table chair sofa couch bench stool bed pillow blanket mattress sheet desk shelf shelves bookshelf
cabinet cupboard drawer dresser wardrobe closet mirror lamp lantern candle chandelier clock
vase frame picture painting poster photo photograph portrait curtain curtains rug carpet mat door
window wall floor ceiling roof stairs staircase step steps fireplace chimney balcony porch
kitchen bathroom bedroom livingroom room hall hallway garage attic basement fridge refrigerator
oven stove microwave sink toilet bathtub bath shower towel soap toothbrush

shirt tshirt blouse sweater hoodie jacket coat vest suit dress skirt gown robe uniform costume
pants trousers jeans shorts sock socks shoe shoes boot boots sneaker sneakers sandal sandals
slipper slippers hat cap helmet crown tiara hood scarf glove gloves mitten tie necktie bowtie belt
bag backpack purse wallet umbrella glasses sunglasses goggles spectacles mask watch bracelet
necklace ring earring earrings pendant jewelry jewel diamond pearl gem brooch badge button zipper
pocket collar sleeve apron bandana headband wig veil cape cloak armor armour shield sword spear bow
arrow gun rifle pistol cannon axe hammer wrench screwdriver saw drill tool tools nail screw rope
chain

car cars truck van bus taxi jeep tractor train tram subway locomotive bicycle bike motorcycle
scooter skateboard surfboard snowboard ski skis sled wagon cart carriage boat ship yacht sailboat
canoe kayak raft submarine ferry airplane plane aircraft jet helicopter rocket spaceship spacecraft
ufo satellite balloon kite parachute wheel tire engine

house home building skyscraper tower castle palace temple church cathedral mosque pagoda shrine
hut cabin cottage barn farm shed tent igloo lighthouse windmill bridge tunnel road street avenue
lane path pathway walkway sidewalk highway alley crosswalk intersection city town village
neighborhood downtown market shop store mall restaurant cafe bar pub hotel hospital school
university library museum gallery theater theatre cinema stadium arena gym office factory
warehouse station airport harbor harbour port dock pier fountain statue monument pyramid ruins
wall fence gate garden yard park playground courtyard plaza square chateau mansion villa
apartment

nature landscape scenery mountain mountains hill hills valley canyon cliff cave volcano lava
desert dune dunes beach shore coast island ocean sea lake river stream creek pond waterfall wave
waves sand rock rocks stone stones pebble boulder forest woods jungle tree trees bush bushes shrub
grass lawn meadow field fields flower flowers rose roses tulip daisy sunflower lily orchid lotus
leaf leaves branch trunk root roots vine moss fern cactus palm pine oak maple bamboo weed seed
seeds petal blossom garden sky cloud clouds sun moon star stars planet galaxy universe space
rainbow rain snow snowflake snowman ice icicle fog mist storm thunder lightning wind tornado
hurricane sunset sunrise dawn dusk night day morning evening afternoon midnight season summer
winter autumn fall spring weather fire flame flames smoke ash dust mud puddle horizon earth world
ground soil dirt

computer laptop keyboard mouse monitor screen television tv phone smartphone tablet camera
radio speaker headphones microphone guitar piano violin drum drums trumpet flute saxophone
harp cello book books notebook newspaper magazine letter card map sign signboard billboard
banner flag poster ticket coin money dollar key lock light lights bulb battery cable wire plug
switch fan heater machine device gadget toy toys ball football soccer basketball baseball
tennis golf racket bat puck trophy medal gift present ribbon bow candle cake firework fireworks
paint brush pencil pen crayon marker paper canvas scissors glue tape sticker stamp

art artwork pattern texture color colour shape line circle square triangle star heart stripe
stripes dot dots spot spots shadow reflection silhouette outline background foreground scene view
image photo style sketch drawing cartoon anime comic illustration mosaic graffiti mural logo
text word words number letter

time year month week hour minute birthday holiday christmas halloween party wedding festival
concert game match race show parade ceremony celebration dream idea love life death peace war
music song dance sport travel vacation trip journey adventure

thing object item stuff piece part side top bottom front middle center centre corner edge end
area place spot region surface
)";

constexpr std::string_view kVerbs = R"(
be have do go come get give take make put let see look watch hear listen feel smell taste touch
hold carry bring send throw catch pick drop push pull lift raise lower open close shut turn twist
move run walk jump hop skip climb crawl swim dive fly float sink fall rise stand sit lie lay rest
sleep wake dream eat drink cook bake fry boil cut chop slice pour mix stir serve wash clean wipe
brush comb paint draw write read sing dance play ride drive sail row steer park stop start begin
end finish wait stay leave arrive enter exit return follow lead chase hunt hide seek find lose
win fight hit kick punch shoot attack defend protect guard save help build break fix repair
create destroy burn melt freeze glow shine sparkle twinkle shimmer reflect cover wrap fill empty
hang stick attach tie wear dress undress adorn decorate hug kiss smile laugh cry weep scream shout
yell whisper talk speak say tell ask answer call think know believe like love hate want need wish
hope try use keep grow shrink change replace swap remove erase delete add become seem appear
disappear vanish emerge perch lean rest point wave nod blink stare gaze peek roam wander explore
graze bloom blossom sprout surround overlook face border line fill flow rush drip splash spray
shine pose perform hover soar glide flutter drift loom tower rise spread stretch scatter gather
)";

constexpr std::string_view kAdjectives = R"(
big small large little tiny huge giant enormous massive miniature tall short long wide narrow
thick thin fat slim skinny heavy light high low deep shallow round square flat sharp dull smooth
rough soft hard hot cold warm cool wet dry clean dirty new old young ancient modern fresh rotten
ripe raw cooked good bad great nice fine pretty beautiful handsome ugly cute lovely gorgeous
elegant fancy plain simple strange weird odd funny happy sad angry scared calm quiet loud noisy
bright dark dim shiny glossy matte sparkling colorful colourful pale vivid
red orange yellow green blue purple violet pink brown black white gray grey silver golden gold
bronze copper beige tan cyan magenta turquoise teal navy maroon crimson scarlet ivory cream
wooden metal metallic plastic glass stone brick marble leather woolen silk cotton paper rubber
furry fluffy hairy fuzzy feathery spiky scaly striped spotted dotted checkered plaid floral
sunny cloudy rainy snowy foggy misty stormy windy icy frozen snowcovered autumnal wintry
full empty open closed broken whole rich poor cheap expensive real fake famous rare common wild
tame domestic free busy lazy tired sleepy hungry thirsty sick healthy strong weak brave shy proud
rusty dusty muddy sandy grassy rocky leafy stylish fashionable vintage retro futuristic
medieval gothic classic traditional rustic cozy cosy tidy messy crowded empty lonely peaceful
chinese japanese korean indian french italian german english american mexican spanish greek
siberian african european asian arctic tropical polar royal magic magical mystical cosmic
realistic cartoonish abstract detailed blurry sharp glowing burning flaming smiling crying
mini jumbo dense sparse pink
)";

constexpr std::string_view kAdverbs = R"(
very really quite rather too so almost nearly just only even still already always never often
sometimes usually rarely seldom here there everywhere somewhere nowhere away back together apart
alone again once twice now then today tonight tomorrow yesterday soon later early late fast
slowly quickly quietly loudly gently softly brightly happily sadly suddenly finally instead
)";

constexpr std::string_view kIrregularPlurals = R"(
men man women woman children child people person feet foot teeth tooth mice mouse geese goose
oxen ox leaves leaf knives knife wives wife wolves wolf lives life loaves loaf halves half
shelves shelf calves calf elves elf scarves scarf hooves hoof cacti cactus fungi fungus
)";

constexpr std::string_view kIrregularVerbForms = R"(
sat sit sitting sit stood stand standing stand lay lie lying lie lain lie worn wear wore wear
held hold ran run running run swam swim swimming swim flew fly flown fly ate eat eaten eat drank
drink drunk drink rode ride ridden ride drove drive driven drive threw throw thrown throw caught
catch brought bring took take taken take gave give given give made make went go gone go came
come seen see saw see got get gotten get put put hung hang spread spread grew grow grown grow
broke break broken break froze freeze frozen freeze fell fall fallen fall rose rise risen rise
sang sing sung sing drew draw drawn draw wrote write written write built build found find lost
lose won win fought fight hit hit cut cut shone shine shot shoot left leave kept keep felt feel
stuck stick tied tie dying die lit light sank sink sunk sink became become begun begin began
begin bent bend bit bite bitten bite blew blow blown blow chose choose chosen choose dug dig fed
feed led lead meant mean met meet paid pay said say sold sell sent send shook shake shaken shake
shut shut slept sleep slid slide spent spend spun spin stole steal stolen steal struck strike
swept sweep swung swing taught teach tore tear torn tear told tell thought think understood
understand woke wake woken wake wove weave woven weave
)";

}  // namespace

const WordSet& articles() {
    static const WordSet s = parse(kArticles);
    return s;
}
const WordSet& prepositions() {
    static const WordSet s = parse(kPrepositions);
    return s;
}
const WordSet& pronouns() {
    static const WordSet s = parse(kPronouns);
    return s;
}
const WordSet& function_words() {
    static const WordSet s = parse(kFunctionWords);
    return s;
}
const WordSet& nouns() {
    static const WordSet s = parse(kNouns);
    return s;
}
const WordSet& verbs() {
    static const WordSet s = parse(kVerbs);
    return s;
}
const WordSet& adjectives() {
    static const WordSet s = parse(kAdjectives);
    return s;
}
const WordSet& adverbs() {
    static const WordSet s = parse(kAdverbs);
    return s;
}
const std::unordered_map<std::string_view, std::string_view>& irregular_plurals() {
    static const auto m = parse_pairs(kIrregularPlurals);
    return m;
}
const std::unordered_map<std::string_view, std::string_view>& irregular_verb_forms() {
    static const auto m = parse_pairs(kIrregularVerbForms);
    return m;
}

}  // namespace lusd::lexicon
